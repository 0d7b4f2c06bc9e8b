#include "spinsim/seqlang.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace spinsim {

ParseError::ParseError(std::string message, int line, int column)
    : std::runtime_error("line " + std::to_string(line) +
                         (column > 0 ? ":" + std::to_string(column) : "") +
                         ": " + message),
      line_(line),
      column_(column) {}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int parse_int(double v, int line, const std::string& what) {
  if (!(v >= -1e9) || !(v <= 1e9) || v != std::floor(v))
    throw ParseError(what + " must be an integer", line);
  return static_cast<int>(v);
}

double parse_number(const std::string& tok, int line, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("");
    if (!std::isfinite(v)) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("invalid number for " + what + ": '" + tok + "'", line);
  }
}

// Recursive-descent arithmetic over one whitespace-free token:
//   expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)* ;
//   factor := number | identifier | '(' expr ')' | '-' factor
class ExprParser {
 public:
  ExprParser(const std::string& text, const std::map<std::string, double>& params,
             int line)
      : text_(text), params_(params), line_(line) {}

  double parse() {
    const double v = expr();
    if (pos_ != text_.size())
      fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, static_cast<int>(pos_) + 1);
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  double expr() {
    double v = term();
    while (peek() == '+' || peek() == '-') {
      const char op = text_[pos_++];
      const double rhs = term();
      v = op == '+' ? v + rhs : v - rhs;
    }
    return v;
  }
  double term() {
    double v = factor();
    while (peek() == '*' || peek() == '/') {
      const char op = text_[pos_++];
      const double rhs = factor();
      if (op == '/') {
        if (rhs == 0.0) fail("division by zero in timing expression");
        v /= rhs;
      } else {
        v *= rhs;
      }
    }
    return v;
  }
  double factor() {
    if (peek() == '-') {
      ++pos_;
      return -factor();
    }
    if (peek() == '(') {
      ++pos_;
      const double v = expr();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(text_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("malformed number");
      }
      if (used == 0 || !std::isfinite(v)) fail("malformed number");
      pos_ += used;
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_') {
      const size_t start = pos_;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
        ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      const auto it = params_.find(name);
      if (it == params_.end()) fail("unknown identifier '" + name + "'");
      return it->second;
    }
    fail("expected number, identifier or '('");
  }

  const std::string& text_;
  const std::map<std::string, double>& params_;
  int line_;
  size_t pos_ = 0;
};

double eval_expr(const std::string& tok, const std::map<std::string, double>& params,
                 int line) {
  return ExprParser(tok, params, line).parse();
}

double parse_phase_rad(const std::string& tok,
                       const std::map<std::string, double>& params, int line) {
  if (tok == "x") return 0.0;
  if (tok == "y") return constants::pi / 2.0;
  if (tok == "-x") return constants::pi;
  if (tok == "-y") return 1.5 * constants::pi;
  return eval_expr(tok, params, line) * constants::pi / 180.0;
}

std::string format_phase(double rad) {
  const double deg = rad * 180.0 / constants::pi;
  auto near = [&](double v) { return std::abs(deg - v) < 1e-9; };
  if (near(0.0)) return "x";
  if (near(90.0)) return "y";
  if (near(180.0)) return "-x";
  if (near(270.0)) return "-y";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", deg);
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

// Emit a decimal for a value stored internally as shown * factor, chosen so
// that re-parsing reproduces the internal value bit for bit.  The obvious
// internal / factor division can land one ulp away from a valid preimage, so
// neighbouring doubles are tried as well.
std::string format_converted(double internal, double factor) {
  const double shown = internal / factor;
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, shown);
    if (std::strtod(buf, nullptr) * factor == internal) return buf;
  }
  for (int dir : {1, -1}) {
    double y = shown;
    for (int step = 0; step < 4; ++step) {
      y = std::nextafter(y, dir > 0 ? HUGE_VAL : -HUGE_VAL);
      std::snprintf(buf, sizeof buf, "%.17g", y);
      if (std::strtod(buf, nullptr) * factor == internal) return buf;
    }
  }
  std::snprintf(buf, sizeof buf, "%.17g", shown);
  return buf;
}

}  // namespace

SequenceProgram parse_sequence(const std::string& text,
                               const std::map<std::string, double>& parameters) {
  SequenceProgram program;
  program.parameters = parameters;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  int acquires = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto tok = split_ws(line);
    const std::string& kw = tok[0];
    if (kw == "pulse") {
      if (tok.size() != 3)
        throw ParseError("pulse needs: pulse <angle_deg> <phase>", lineno);
      HardPulse p;
      p.angle = eval_expr(tok[1], parameters, lineno) * constants::pi / 180.0;
      p.phase = parse_phase_rad(tok[2], parameters, lineno);
      if (!std::isfinite(p.angle))
        throw ParseError("pulse angle must be finite", lineno);
      program.events.push_back(p);
    } else if (kw == "delay") {
      if (tok.size() != 2) throw ParseError("delay needs: delay <seconds>", lineno);
      Delay d{eval_expr(tok[1], parameters, lineno)};
      if (d.duration < 0.0) throw ParseError("delay must be non-negative", lineno);
      program.events.push_back(d);
    } else if (kw == "lock") {
      if (tok.size() != 4)
        throw ParseError("lock needs: lock <phase> <amplitude_hz> <duration_s>",
                         lineno);
      Lock l;
      l.phase = parse_phase_rad(tok[1], parameters, lineno);
      l.amplitude_hz = eval_expr(tok[2], parameters, lineno);
      l.duration = eval_expr(tok[3], parameters, lineno);
      if (l.amplitude_hz < 0.0)
        throw ParseError("lock amplitude must be non-negative", lineno);
      if (l.duration < 0.0)
        throw ParseError("lock duration must be non-negative", lineno);
      program.events.push_back(l);
    } else if (kw == "acquire") {
      if (tok.size() != 3)
        throw ParseError("acquire needs: acquire <points> <dwell_s>", lineno);
      const double pts = eval_expr(tok[1], parameters, lineno);
      if (pts < 1.0 || pts != std::floor(pts) || pts > 1e7)
        throw ParseError("acquire points must be a positive integer", lineno);
      Acquire a{static_cast<int>(pts), eval_expr(tok[2], parameters, lineno)};
      if (a.dwell < 0.0) throw ParseError("dwell must be non-negative", lineno);
      if (++acquires > 1)
        throw ParseError("duplicate acquire: at most one per program", lineno);
      program.events.push_back(a);
    } else {
      throw ParseError("unknown event '" + kw + "'", lineno);
    }
  }
  return program;
}

std::string serialize_sequence(const SequenceProgram& program) {
  std::ostringstream out;
  if (!program.name.empty()) out << "# " << program.name << "\n";
  for (const auto& ev : program.events) {
    if (const auto* p = std::get_if<HardPulse>(&ev)) {
      out << "pulse " << format_double(p->angle * 180.0 / constants::pi) << " "
          << format_phase(p->phase) << "\n";
    } else if (const auto* d = std::get_if<Delay>(&ev)) {
      out << "delay " << format_double(d->duration) << "\n";
    } else if (const auto* l = std::get_if<Lock>(&ev)) {
      out << "lock " << format_phase(l->phase) << " "
          << format_double(l->amplitude_hz) << " " << format_double(l->duration)
          << "\n";
    } else if (const auto* a = std::get_if<Acquire>(&ev)) {
      out << "acquire " << a->points << " " << format_double(a->dwell) << "\n";
    }
  }
  return out.str();
}

namespace {

struct IniEntry {
  std::string value;
  int line;
};

using IniSection = std::vector<std::pair<std::string, IniEntry>>;

std::map<std::string, IniSection> parse_ini(const std::string& text,
                                            const std::set<std::string>& sections) {
  std::map<std::string, IniSection> out;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::string current;
  bool any = false;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    any = true;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno);
      current = line.substr(1, line.size() - 2);
      if (!sections.count(current))
        throw ParseError("unknown section '" + current + "'", lineno);
      out[current];  // section may be empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value'", lineno);
    if (current.empty())
      throw ParseError("key outside of any section", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno);
    out[current].emplace_back(key, IniEntry{value, lineno});
  }
  if (!any) throw ParseError("empty system file", 1);
  return out;
}

}  // namespace

SystemFile parse_system(const std::string& text) {
  const std::set<std::string> known = {"spins",      "couplings", "dipolar",
                                       "relaxation", "binding",   "scenario"};
  auto ini = parse_ini(text, known);

  SystemFile file;
  if (!ini.count("spins")) throw ParseError("missing [spins] section", 1);

  int count = 0;
  std::vector<double> offsets;
  std::set<std::string> seen;
  for (const auto& [key, entry] : ini["spins"]) {
    if (!seen.insert(key).second)
      throw ParseError("duplicate key '" + key + "'", entry.line);
    if (key == "count") {
      count = parse_int(parse_number(entry.value, entry.line, "count"),
                        entry.line, "count");
      if (count < 1 || count > SpinSystem::max_spins)
        throw ParseError("count must be between 1 and 8", entry.line);
    } else if (key == "offsets_hz") {
      for (const auto& t : split_ws(entry.value))
        offsets.push_back(parse_number(t, entry.line, "offsets_hz"));
    } else {
      throw ParseError("unknown key '" + key + "' in [spins]", entry.line);
    }
  }
  if (count == 0) throw ParseError("missing count in [spins]", 1);
  if (static_cast<int>(offsets.size()) != count)
    throw ParseError("offsets_hz must list exactly count values", 1);

  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(count, count);
  if (ini.count("couplings")) {
    for (const auto& [key, entry] : ini["couplings"]) {
      if (key != "j_hz")
        throw ParseError("unknown key '" + key + "' in [couplings]", entry.line);
      const auto t = split_ws(entry.value);
      if (t.size() != 3)
        throw ParseError("j_hz needs: j_hz = <i> <j> <hz>", entry.line);
      const int a = parse_int(parse_number(t[0], entry.line, "j_hz index"),
                              entry.line, "j_hz index");
      const int b = parse_int(parse_number(t[1], entry.line, "j_hz index"),
                              entry.line, "j_hz index");
      if (a < 0 || b < 0 || a >= count || b >= count || a == b)
        throw ParseError("j_hz indices out of range", entry.line);
      const double v = parse_number(t[2], entry.line, "j_hz");
      j(a, b) = v;
      j(b, a) = v;
    }
  }

  std::vector<DipolarPair> pairs;
  if (ini.count("dipolar")) {
    for (const auto& [key, entry] : ini["dipolar"]) {
      if (key != "pair")
        throw ParseError("unknown key '" + key + "' in [dipolar]", entry.line);
      const auto t = split_ws(entry.value);
      if (t.size() != 2 && t.size() != 3)
        throw ParseError("pair needs: pair = <i> <j> [distance_angstrom]",
                         entry.line);
      DipolarPair p;
      p.i = parse_int(parse_number(t[0], entry.line, "pair index"),
                      entry.line, "pair index");
      p.j = parse_int(parse_number(t[1], entry.line, "pair index"),
                      entry.line, "pair index");
      // ortho aromatic H-H distance; documented default
      const double angstrom =
          t.size() == 3 ? parse_number(t[2], entry.line, "pair distance") : 2.48;
      if (!(angstrom > 0.0))
        throw ParseError("pair distance must be positive", entry.line);
      p.distance_m = angstrom * 1e-10;
      if (p.i < 0 || p.j < 0 || p.i >= count || p.j >= count || p.i == p.j)
        throw ParseError("pair indices out of range", entry.line);
      pairs.push_back(p);
    }
  }

  try {
    file.system = make_spin_system(count, offsets, j, pairs);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 1);
  }

  if (ini.count("relaxation")) {
    RelaxationModel m;
    std::set<std::string> rseen;
    for (const auto& [key, entry] : ini["relaxation"]) {
      if (!rseen.insert(key).second)
        throw ParseError("duplicate key '" + key + "'", entry.line);
      const double v = parse_number(entry.value, entry.line, key);
      if (key == "tau_c_s") {
        if (!(v > 0.0)) throw ParseError("tau_c_s must be positive", entry.line);
        m.tau_c = v;
      } else if (key == "random_field_rate_s") {
        if (v < 0.0)
          throw ParseError("random_field_rate_s must be non-negative", entry.line);
        m.random_field_rate = v;
      } else if (key == "larmor_mhz") {
        if (v < 0.0) throw ParseError("larmor_mhz must be non-negative", entry.line);
        m.larmor_rad_s = constants::two_pi * v * 1e6;
      } else {
        throw ParseError("unknown key '" + key + "' in [relaxation]", entry.line);
      }
    }
    if (!(m.tau_c > 0.0))
      throw ParseError("[relaxation] requires tau_c_s", 1);
    file.relaxation = m;
  }

  if (ini.count("binding")) {
    BindingModel b;
    std::set<std::string> bseen;
    for (const auto& [key, entry] : ini["binding"]) {
      if (!bseen.insert(key).second)
        throw ParseError("duplicate key '" + key + "'", entry.line);
      const double v = parse_number(entry.value, entry.line, key);
      if (key == "fraction") {
        if (v < 0.0 || v > 1.0)
          throw ParseError("fraction must lie in [0,1]", entry.line);
        b.bound_fraction = v;
      } else if (key == "bound_tau_c_s") {
        if (!(v > 0.0))
          throw ParseError("bound_tau_c_s must be positive", entry.line);
        b.bound_tau_c = v;
      } else if (key == "bound_extra_rate_s") {
        if (v < 0.0)
          throw ParseError("bound_extra_rate_s must be non-negative", entry.line);
        b.bound_extra_random_field_rate = v;
      } else {
        throw ParseError("unknown key '" + key + "' in [binding]", entry.line);
      }
    }
    if (!(b.bound_tau_c > 0.0))
      throw ParseError("[binding] requires bound_tau_c_s", 1);
    file.binding = b;
  }

  if (ini.count("scenario")) {
    std::set<std::string> sseen;
    for (const auto& [key, entry] : ini["scenario"]) {
      if (!sseen.insert(key).second)
        throw ParseError("duplicate key '" + key + "'", entry.line);
      if (key == "name") {
        file.scenario.name = entry.value;
      } else if (key == "temperature_k") {
        const double v = parse_number(entry.value, entry.line, key);
        if (!(v > 0.0))
          throw ParseError("temperature_k must be positive", entry.line);
        file.scenario.temperature_k = v;
      } else if (key == "field_t") {
        const double v = parse_number(entry.value, entry.line, key);
        if (v < 0.0) throw ParseError("field_t must be non-negative", entry.line);
        file.scenario.field_t = v;
      } else if (key == "polarization") {
        const double v = parse_number(entry.value, entry.line, key);
        if (std::abs(v) > 1.0)
          throw ParseError("polarization must lie in [-1,1]", entry.line);
        file.scenario.polarization = v;
      } else {
        throw ParseError("unknown key '" + key + "' in [scenario]", entry.line);
      }
    }
  }
  return file;
}

std::string serialize_system(const SystemFile& file) {
  std::ostringstream out;
  out << "[spins]\ncount = " << file.system.n_spins << "\noffsets_hz =";
  for (double o : file.system.offsets_hz) out << " " << format_double(o);
  out << "\n\n[couplings]\n";
  for (int i = 0; i < file.system.n_spins; ++i)
    for (int j = i + 1; j < file.system.n_spins; ++j)
      if (file.system.j_hz(i, j) != 0.0)
        out << "j_hz = " << i << " " << j << " "
            << format_double(file.system.j_hz(i, j)) << "\n";
  out << "\n[dipolar]\n";
  for (const auto& p : file.system.dipolar_pairs)
    out << "pair = " << p.i << " " << p.j << " "
        << format_converted(p.distance_m, 1e-10) << "\n";
  if (file.relaxation) {
    out << "\n[relaxation]\ntau_c_s = " << format_double(file.relaxation->tau_c)
        << "\nrandom_field_rate_s = "
        << format_double(file.relaxation->random_field_rate)
        << "\nlarmor_mhz = "
        << format_converted(file.relaxation->larmor_rad_s, constants::two_pi * 1e6)
        << "\n";
  }
  if (file.binding) {
    out << "\n[binding]\nfraction = " << format_double(file.binding->bound_fraction)
        << "\nbound_tau_c_s = " << format_double(file.binding->bound_tau_c)
        << "\nbound_extra_rate_s = "
        << format_double(file.binding->bound_extra_random_field_rate) << "\n";
  }
  out << "\n[scenario]\n";
  if (!file.scenario.name.empty()) out << "name = " << file.scenario.name << "\n";
  out << "temperature_k = " << format_double(file.scenario.temperature_k)
      << "\nfield_t = " << format_double(file.scenario.field_t)
      << "\npolarization = " << format_double(file.scenario.polarization) << "\n";
  return out.str();
}

DecayCurve read_curve(std::istream& in) {
  DecayCurve curve;
  std::string raw;
  int lineno = 0;
  bool header_seen = false;
  int columns = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string::npos)
        curve.metadata.emplace_back(trim(body.substr(0, colon)),
                                    trim(body.substr(colon + 1)));
      continue;
    }
    if (!header_seen) {
      if (line == "time_s,amplitude")
        columns = 2;
      else if (line == "time_s,amplitude,sigma")
        columns = 3;
      else
        throw ParseError("expected header 'time_s,amplitude[,sigma]'", lineno);
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
    if (static_cast<int>(cells.size()) != columns)
      throw ParseError("expected " + std::to_string(columns) +
                           " comma-separated values",
                       lineno);
    curve.times.push_back(parse_number(cells[0], lineno, "time"));
    curve.amplitudes.push_back(parse_number(cells[1], lineno, "amplitude"));
    if (columns == 3)
      curve.sigma.push_back(parse_number(cells[2], lineno, "sigma"));
  }
  if (!header_seen) throw ParseError("missing curve header", lineno ? lineno : 1);
  for (size_t k = 1; k < curve.times.size(); ++k)
    if (!(curve.times[k] > curve.times[k - 1]))
      throw ParseError("times must be strictly increasing", 0);
  curve.validate();
  return curve;
}

void write_curve(std::ostream& out, const DecayCurve& curve) {
  curve.validate();
  for (const auto& [k, v] : curve.metadata) out << "# " << k << ": " << v << "\n";
  const bool with_sigma = !curve.sigma.empty();
  out << (with_sigma ? "time_s,amplitude,sigma" : "time_s,amplitude") << "\n";
  char buf[32];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return std::string(buf);
  };
  for (size_t k = 0; k < curve.times.size(); ++k) {
    out << fmt(curve.times[k]) << "," << fmt(curve.amplitudes[k]);
    if (with_sigma) out << "," << fmt(curve.sigma[k]);
    out << "\n";
  }
}

DecayCurve read_curve_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open curve file: " + path);
  return read_curve(in);
}

void write_curve_file(const std::string& path, const DecayCurve& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open curve file for writing: " + path);
  write_curve(out, curve);
}

}  // namespace spinsim
