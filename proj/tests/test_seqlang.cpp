#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "spinsim/seqlang.hpp"

using namespace spinsim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string data_dir = SPINSIM_DATA_DIR;

}  // namespace

TEST_CASE("shipped pcba system file") {
  const SystemFile file = parse_system(slurp(data_dir + "/pcba-thermal-300K.sys"));
  CHECK(file.system.n_spins == 4);
  CHECK(file.system.offsets_hz == std::vector<double>{0.0, 190.0, 190.0, 0.0});
  CHECK(file.system.j_hz(0, 1) == 8.0);
  CHECK(file.system.j_hz(2, 3) == 8.0);
  CHECK(file.system.j_hz(0, 2) == 0.0);
  REQUIRE(file.system.dipolar_pairs.size() == 2);
  CHECK(file.system.dipolar_pairs[0].distance_m ==
        doctest::Approx(2.48e-10).epsilon(1e-12));
  REQUIRE(file.relaxation.has_value());
  CHECK(file.relaxation->tau_c > 0.0);
  CHECK(file.scenario.temperature_k == 300.0);
  CHECK(file.scenario.field_t == 11.7);
  CHECK(file.scenario.name == "pcba-thermal-300K");
}

TEST_CASE("system file errors") {
  CHECK_THROWS_AS(parse_system(""), ParseError);

  const std::string negative =
      "[spins]\ncount = 2\noffsets_hz = 0 10\n[dipolar]\npair = 0 1 -2.0\n";
  try {
    parse_system(negative);
    FAIL("expected a range error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("distance") != std::string::npos);
    CHECK(e.line() == 5);
  }

  CHECK_THROWS_AS(
      parse_system("[spins]\ncount = 2\ncount = 3\noffsets_hz = 0 0\n"),
      ParseError);
  CHECK_THROWS_AS(parse_system("[spins]\ncount = 2\noffsets_hz = 0\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_system("[bogus]\nx = 1\n"), ParseError);
  CHECK_THROWS_AS(
      parse_system("[spins]\ncount = 1\noffsets_hz = 0\nmystery = 2\n"),
      ParseError);
  CHECK_THROWS_AS(parse_system("key = 1\n"), ParseError);
  CHECK_THROWS_AS(
      parse_system("[spins]\ncount = 1\noffsets_hz = 0\n[relaxation]\n"
                   "tau_c_s = -1\n"),
      ParseError);
}

TEST_CASE("dipolar distance default") {
  const SystemFile file = parse_system(
      "[spins]\ncount = 2\noffsets_hz = 0 190\n[dipolar]\npair = 0 1\n");
  REQUIRE(file.system.dipolar_pairs.size() == 1);
  CHECK(file.system.dipolar_pairs[0].distance_m ==
        doctest::Approx(2.48e-10).epsilon(1e-12));
}

TEST_CASE("system file round trip") {
  for (const std::string name :
       {"pcba-thermal-300K.sys", "pcba-dnp-343K.sys", "pcba-dnp-bcd.sys",
        "pcba-bare.sys"}) {
    const std::string canonical =
        serialize_system(parse_system(slurp(data_dir + "/" + name)));
    CHECK(serialize_system(parse_system(canonical)) == canonical);
  }
}

TEST_CASE("sequence DSL matches the programmatic constructor") {
  const TimingSet t = compute_m2s_timings(8.0, 190.0);
  const std::map<std::string, double> params{
      {"t1", t.t1}, {"t2", t.t2}, {"t3", t.t3}};
  const SequenceProgram parsed =
      parse_sequence(slurp(data_dir + "/singlet-locking.seq"), params);
  const SequenceProgram built = singlet_locking_program(t, 2000.0, 5.0);

  REQUIRE(parsed.events.size() == built.events.size());
  for (size_t k = 0; k < built.events.size(); ++k) {
    CHECK(parsed.events[k].index() == built.events[k].index());
    if (const auto* p = std::get_if<HardPulse>(&built.events[k])) {
      const auto& q = std::get<HardPulse>(parsed.events[k]);
      CHECK(q.angle == doctest::Approx(p->angle).epsilon(1e-12));
      CHECK(q.phase == doctest::Approx(p->phase).epsilon(1e-12));
    } else if (const auto* d = std::get_if<Delay>(&built.events[k])) {
      CHECK(std::get<Delay>(parsed.events[k]).duration == d->duration);
    } else if (const auto* l = std::get_if<Lock>(&built.events[k])) {
      const auto& m = std::get<Lock>(parsed.events[k]);
      CHECK(m.amplitude_hz == l->amplitude_hz);
      CHECK(m.duration == l->duration);
      CHECK(m.phase == doctest::Approx(l->phase).epsilon(1e-12));
    }
  }
}

TEST_CASE("sequence expressions") {
  const SequenceProgram p =
      parse_sequence("delay 1/(4*J)\n", {{"J", 8.0}});
  CHECK(std::get<Delay>(p.events.at(0)).duration == 1.0 / 32.0);

  const SequenceProgram q = parse_sequence("pulse 2*45 x\ndelay 1e-3+2e-3\n");
  CHECK(std::get<HardPulse>(q.events.at(0)).angle ==
        doctest::Approx(constants::pi / 2).epsilon(1e-12));
  CHECK(std::get<Delay>(q.events.at(1)).duration ==
        doctest::Approx(3e-3).epsilon(1e-12));

  CHECK_THROWS_AS(parse_sequence("delay 1/(J-8)\n", {{"J", 8.0}}), ParseError);
  CHECK_THROWS_AS(parse_sequence("delay tau\n"), ParseError);
  CHECK_THROWS_AS(parse_sequence("delay -1\n"), ParseError);
  CHECK_THROWS_AS(parse_sequence("warble 1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_sequence("acquire 1 1e-4\nacquire 1 1e-4\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_sequence("acquire 1.5 1e-4\n"), ParseError);

  try {
    parse_sequence("pulse 90 x\ndelay (1+2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 0);
  }
}

TEST_CASE("sequence round trip") {
  const std::string text = slurp(data_dir + "/singlet-locking.seq");
  const TimingSet t = compute_m2s_timings(8.0, 190.0);
  const std::map<std::string, double> params{
      {"t1", t.t1}, {"t2", t.t2}, {"t3", t.t3}};
  const SequenceProgram p = parse_sequence(text, params);
  const std::string canonical = serialize_sequence(p);
  const SequenceProgram q = parse_sequence(canonical);
  CHECK(serialize_sequence(q) == canonical);
  REQUIRE(q.events.size() == p.events.size());
  for (size_t k = 0; k < p.events.size(); ++k)
    CHECK(q.events[k].index() == p.events[k].index());

  const std::string ir = slurp(data_dir + "/inversion-recovery.seq");
  const std::string ir_canonical = serialize_sequence(parse_sequence(ir));
  CHECK(serialize_sequence(parse_sequence(ir_canonical)) == ir_canonical);
}

TEST_CASE("curve round trip is bit-identical") {
  DecayCurve curve;
  std::mt19937 rng(99);
  std::normal_distribution<double> gauss;
  double t = 0.0;
  for (int k = 0; k < 50; ++k) {
    t += 0.1 + 0.05 * std::abs(gauss(rng));
    curve.times.push_back(t);
    curve.amplitudes.push_back(std::exp(-t / 15.0) + 0.01 * gauss(rng));
    curve.sigma.push_back(0.01);
  }
  curve.metadata.emplace_back("scenario", "round-trip");
  curve.metadata.emplace_back("field_t", "11.7");

  std::ostringstream out;
  write_curve(out, curve);
  std::istringstream in(out.str());
  const DecayCurve back = read_curve(in);
  REQUIRE(back.times.size() == curve.times.size());
  for (size_t k = 0; k < curve.times.size(); ++k) {
    CHECK(back.times[k] == curve.times[k]);
    CHECK(back.amplitudes[k] == curve.amplitudes[k]);
    CHECK(back.sigma[k] == curve.sigma[k]);
  }
  CHECK(back.metadata == curve.metadata);

  std::ostringstream out2;
  write_curve(out2, back);
  CHECK(out2.str() == out.str());
}

TEST_CASE("curve format errors") {
  {
    std::istringstream in(
        "time_s,amplitude\n1.0,0.5\n0.5,0.7\n");  // shuffled times
    CHECK_THROWS_AS(read_curve(in), ParseError);
  }
  {
    std::istringstream in("time_s,amplitude\n1.0\n");  // missing amplitude
    try {
      read_curve(in);
      FAIL("expected a format error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  {
    std::istringstream in("strange,header\n1.0,0.5\n");
    CHECK_THROWS_AS(read_curve(in), ParseError);
  }
  {
    std::istringstream in("");
    CHECK_THROWS_AS(read_curve(in), ParseError);
  }
  CHECK_THROWS_AS(read_curve_file("/nonexistent/curve.csv"),
                  std::runtime_error);
}

TEST_CASE("parsers never crash on fuzzed input") {
  std::mt19937 rng(4242);
  std::uniform_int_distribution<int> len(0, 160);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> printable(32, 126);
  int system_ok = 0, sequence_ok = 0, curve_ok = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::string text;
    const int n = len(rng);
    const bool ascii = iter % 2 == 0;
    for (int k = 0; k < n; ++k) {
      int c = ascii ? printable(rng) : byte(rng);
      if (k > 0 && k % 23 == 0) c = '\n';
      text.push_back(static_cast<char>(c));
    }
    try {
      parse_system(text);
      ++system_ok;
    } catch (const ParseError&) {
    }
    try {
      parse_sequence(text, {{"t1", 0.03}});
      ++sequence_ok;
    } catch (const ParseError&) {
    }
    try {
      std::istringstream in(text);
      read_curve(in);
      ++curve_ok;
    } catch (const ParseError&) {
    }
  }
  // random bytes should essentially never form a valid system file
  CHECK(system_ok == 0);
  CHECK(curve_ok == 0);
  CHECK(sequence_ok >= 0);
}

TEST_CASE("serialize_system emits a parseable canonical form") {
  const SystemFile file = parse_system(slurp(data_dir + "/pcba-dnp-bcd.sys"));
  const SystemFile again = parse_system(serialize_system(file));
  CHECK(again.system.n_spins == file.system.n_spins);
  REQUIRE(again.binding.has_value());
  CHECK(again.binding->bound_fraction == file.binding->bound_fraction);
  CHECK(again.binding->bound_tau_c == file.binding->bound_tau_c);
  REQUIRE(again.relaxation.has_value());
  CHECK(again.relaxation->tau_c == file.relaxation->tau_c);
  CHECK(again.scenario.polarization == file.scenario.polarization);
}
