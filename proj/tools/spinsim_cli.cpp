// Command-line front end: simulate sweeps, inspect decoherence-free
// subspaces, fit decay curves, and calibrate relaxation parameters.
//
// Exit codes: 0 success, 1 usage, 2 input error, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spinsim/seqlang.hpp"
#include "spinsim/sweep.hpp"

using namespace spinsim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(bool porcelain, const std::string& key, double value,
          const std::string& human) {
  if (porcelain)
    std::printf("%s=%.12g\n", key.c_str(), value);
  else
    std::printf("%s\n", human.c_str());
}

double larmor_of(const SystemFile& file) {
  if (file.relaxation && file.relaxation->larmor_rad_s > 0.0)
    return file.relaxation->larmor_rad_s;
  return file.system.gyromagnetic_ratio * file.scenario.field_t;
}

TimingSet sweep_timings(const SystemFile& file, bool formula) {
  double j = 0.0, dnu = 0.0;
  for (int a = 0; a < file.system.n_spins; ++a)
    for (int b = a + 1; b < file.system.n_spins; ++b)
      if (file.system.j_hz(a, b) != 0.0) {
        j = file.system.j_hz(a, b);
        dnu = std::abs(file.system.offsets_hz[a] - file.system.offsets_hz[b]);
      }
  if (!(j > 0.0) || !(dnu > 0.0))
    throw std::invalid_argument(
        "system has no coupled pair with a shift difference; cannot derive "
        "sweep timings");
  const TimingSet f = compute_m2s_timings(j, dnu);
  if (formula) return f;
  TimingRanges ranges{0.8 * f.t1, 1.2 * f.t1, 0.6 * f.t2, 1.1 * f.t2,
                      0.1 * f.t3, 1.1 * f.t3};
  return optimize_timings(file.system, ranges).timings;
}

int cmd_simulate(const std::string& system_path, const std::string& seq_path,
                 const std::string& variable, double start, double stop,
                 int points, double lock_amp, bool formula_timings,
                 const std::string& out_path) {
  const SystemFile file = parse_system(slurp(system_path));
  if (!file.relaxation)
    throw std::invalid_argument("system file has no [relaxation] section");
  RelaxationModel model = *file.relaxation;
  if (model.larmor_rad_s == 0.0) model.larmor_rad_s = larmor_of(file);
  Matrix r = file.binding
                 ? exchange_averaged_superoperator(file.system, model,
                                                   *file.binding)
                 : relaxation_superoperator(file.system, model);
  const double pol =
      file.scenario.polarization != 0.0 ? file.scenario.polarization : 1e-2;

  DecayCurve curve;
  if (!seq_path.empty()) {
    // single program run; the curve is the acquired sample train
    std::map<std::string, double> params;
    const TimingSet t = sweep_timings(file, formula_timings);
    params["t1"] = t.t1;
    params["t2"] = t.t2;
    params["t3"] = t.t3;
    const SequenceProgram program = parse_sequence(slurp(seq_path), params);
    Engine engine = Engine::with_relaxation(file.system, r);
    const RunResult run =
        run_sequence(engine, program, thermal_state(file.system, pol));
    curve.times = run.sample_times;
    for (const Complex& s : run.samples) curve.amplitudes.push_back(std::abs(s));
    curve.metadata.emplace_back("sequence", seq_path);
  } else {
    SweepOptions options;
    if (variable == "lock_duration")
      options.variable = SweepVariable::LockDuration;
    else if (variable == "ir_delay")
      options.variable = SweepVariable::IrDelay;
    else
      throw std::invalid_argument("variable must be lock_duration or ir_delay");
    if (points < 1) throw std::invalid_argument("points must be >= 1");
    for (int k = 0; k < points; ++k)
      options.grid.push_back(
          points == 1 ? start : start + (stop - start) * k / (points - 1));
    options.lock_amplitude_hz = lock_amp;
    options.polarization = pol;
    if (options.variable == SweepVariable::LockDuration)
      options.timings = sweep_timings(file, formula_timings);
    Engine engine =
        options.variable == SweepVariable::IrDelay
            ? Engine::with_relaxation(file.system, r,
                                      thermal_state(file.system, pol).rho)
            : Engine::with_relaxation(file.system, r);
    curve = sweep_simulate(engine, options);
  }
  if (!file.scenario.name.empty())
    curve.metadata.emplace_back("scenario", file.scenario.name);
  if (out_path.empty() || out_path == "-")
    write_curve(std::cout, curve);
  else
    write_curve_file(out_path, curve);
  return 0;
}

int cmd_dfs(const std::string& system_path, bool porcelain) {
  const SystemFile file = parse_system(slurp(system_path));
  RelaxationModel model;
  if (file.relaxation) {
    model = *file.relaxation;
  } else {
    model.tau_c = 1e-10;
  }
  model.random_field_rate = 0.0;  // leakage-free generator defines the DFS
  if (model.larmor_rad_s == 0.0) model.larmor_rad_s = larmor_of(file);
  Liouvillian l;
  l.hilbert_dim = file.system.dim();
  l.generator = dipolar_redfield_superoperator(file.system, model);
  const DfsBasis basis = decoherence_free_subspace(l);
  if (porcelain) {
    std::printf("dimension=%d\ngap=%.12g\n", basis.dimension, basis.gap);
  } else {
    std::printf("decoherence-free subspace dimension: %d (of %d)\n",
                basis.dimension, l.dim());
    std::printf("singular-value gap at the cut: %.3g\n", basis.gap);
  }
  return 0;
}

int cmd_fit(const std::string& curve_path, const std::string& model,
            bool porcelain) {
  const DecayCurve curve = read_curve_file(curve_path);
  FitResult fit;
  if (model == "exp")
    fit = fit_exponential(curve);
  else if (model == "ir")
    fit = fit_inversion_recovery(curve);
  else if (model == "buildup")
    fit = fit_buildup(curve);
  else
    throw std::invalid_argument("model must be exp, ir or buildup");
  if (porcelain) {
    std::printf("model=%s\nlifetime=%.12g\nlifetime_stderr=%.12g\n"
                "amplitude=%.12g\noffset=%.12g\nrms_residual=%.12g\n",
                fit.model.c_str(), fit.lifetime, fit.lifetime_stderr,
                fit.amplitude, fit.offset, fit.rms_residual);
  } else {
    std::printf("%s fit: lifetime %.4g +/- %.2g s, amplitude %.4g, "
                "offset %.4g, rms residual %.3g\n",
                fit.model.c_str(), fit.lifetime, fit.lifetime_stderr,
                fit.amplitude, fit.offset, fit.rms_residual);
  }
  return 0;
}

double lifetime_from(const std::string& value) {
  // either a number (seconds) or a curve file to fit
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  return fit_exponential(read_curve_file(value)).lifetime;
}

int cmd_contrast(const std::string& free_arg, const std::string& obs_arg,
                 bool porcelain) {
  const double t_free = lifetime_from(free_arg);
  const double t_obs = lifetime_from(obs_arg);
  const double c = contrast(t_free, t_obs);
  emit(porcelain, "contrast", c,
       "contrast: " + std::to_string(100.0 * c).substr(0, 5) + "% (free " +
           std::to_string(t_free) + " s, observed " + std::to_string(t_obs) +
           " s)");
  return 0;
}

int cmd_timings(double j, double dnu, bool porcelain) {
  const TimingSet t = compute_m2s_timings(j, dnu);
  if (porcelain) {
    std::printf("t1=%.12g\nt2=%.12g\nt3=%.12g\n", t.t1, t.t2, t.t3);
  } else {
    std::printf("t1 = %.4f ms\nt2 = %.4f ms\nt3 = %.4f ms\n", t.t1 * 1e3,
                t.t2 * 1e3, t.t3 * 1e3);
  }
  return 0;
}

int cmd_polarization(double field, double temperature, double measured,
                     bool porcelain) {
  const double p = thermal_polarization(field, temperature);
  if (porcelain)
    std::printf("thermal_polarization=%.12g\n", p);
  else
    std::printf("thermal polarization at %.3g T, %.3g K: %.3e (%.2e %%)\n",
                field, temperature, p, 100.0 * p);
  if (measured > 0.0) {
    const double e = enhancement_factor(measured, field, temperature);
    if (porcelain)
      std::printf("enhancement=%.12g\n", e);
    else
      std::printf("enhancement of measured polarization %.3e: %.1f x\n",
                  measured, e);
  }
  return 0;
}

int cmd_calibrate(const std::string& system_path, double t1, double ts,
                  bool binding, double bound_fraction,
                  const std::string& out_path, bool porcelain) {
  SystemFile file = parse_system(slurp(system_path));
  const double w0 = larmor_of(file);
  if (binding) {
    if (!file.relaxation)
      throw std::invalid_argument(
          "binding calibration needs a calibrated [relaxation] section");
    RelaxationModel free_model = *file.relaxation;
    if (free_model.larmor_rad_s == 0.0) free_model.larmor_rad_s = w0;
    const BindingCalibrationResult res =
        calibrate_binding(file.system, free_model, {t1, ts}, bound_fraction);
    file.binding = res.binding;
    if (porcelain)
      std::printf("bound_fraction=%.12g\nbound_tau_c=%.12g\n"
                  "bound_extra_rate=%.12g\nachieved_t1=%.12g\n"
                  "achieved_ts=%.12g\n",
                  res.binding.bound_fraction, res.binding.bound_tau_c,
                  res.binding.bound_extra_random_field_rate, res.achieved_t1,
                  res.achieved_ts);
    else
      std::printf("binding: f %.2f, bound tau_c %.4e s, extra rate %.4e /s "
                  "-> T1 %.4f s, TS %.4f s\n",
                  res.binding.bound_fraction, res.binding.bound_tau_c,
                  res.binding.bound_extra_random_field_rate, res.achieved_t1,
                  res.achieved_ts);
  } else {
    const CalibrationResult res =
        calibrate_relaxation(file.system, {t1, ts}, w0);
    file.relaxation = res.model;
    if (porcelain)
      std::printf("tau_c=%.12g\nrandom_field_rate=%.12g\nachieved_t1=%.12g\n"
                  "achieved_ts=%.12g\n",
                  res.model.tau_c, res.model.random_field_rate, res.achieved_t1,
                  res.achieved_ts);
    else
      std::printf("tau_c %.4e s, random-field rate %.4e /s "
                  "-> T1 %.4f s, TS %.4f s\n",
                  res.model.tau_c, res.model.random_field_rate, res.achieved_t1,
                  res.achieved_ts);
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::invalid_argument("cannot write " + out_path);
    out << serialize_system(file);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinsim: four-spin singlet-state simulator and analysis tool"};
  app.require_subcommand(1);
  bool porcelain = false;
  app.add_flag("--porcelain", porcelain, "machine-readable key=value output");

  auto* sim = app.add_subcommand("simulate", "simulate a sweep or a sequence");
  std::string sim_system, sim_seq, sim_variable = "lock_duration", sim_out;
  double sim_start = 0.0, sim_stop = 0.0, sim_lock_amp = 2000.0;
  int sim_points = 1;
  bool sim_formula = false;
  sim->add_option("--system", sim_system, "system file")->required();
  sim->add_option("--sequence", sim_seq, "sequence DSL file (single run)");
  sim->add_option("--variable", sim_variable, "lock_duration or ir_delay");
  sim->add_option("--start", sim_start, "sweep start (s)");
  sim->add_option("--stop", sim_stop, "sweep stop (s)");
  sim->add_option("--points", sim_points, "sweep point count");
  sim->add_option("--lock-amp", sim_lock_amp, "lock amplitude (Hz)");
  sim->add_flag("--formula-timings", sim_formula,
                "use the closed-form timings instead of the optimizer");
  sim->add_option("-o,--output", sim_out, "output curve path ('-' = stdout)");

  auto* dfs = app.add_subcommand("dfs", "decoherence-free subspace analysis");
  std::string dfs_system;
  dfs->add_option("--system", dfs_system, "system file")->required();

  auto* fit = app.add_subcommand("fit", "fit a decay curve");
  std::string fit_curve, fit_model = "exp";
  fit->add_option("--curve", fit_curve, "curve CSV file")->required();
  fit->add_option("--model", fit_model, "exp, ir or buildup");

  auto* con = app.add_subcommand("contrast", "lifetime contrast");
  std::string con_free, con_obs;
  con->add_option("--free", con_free, "free lifetime (s) or curve file")
      ->required();
  con->add_option("--obs", con_obs, "observed lifetime (s) or curve file")
      ->required();

  auto* tim = app.add_subcommand("timings", "magnetization-to-singlet timings");
  double tim_j = 0.0, tim_dnu = 0.0;
  tim->add_option("--j", tim_j, "J coupling (Hz)")->required();
  tim->add_option("--dnu", tim_dnu, "shift difference (Hz)")->required();

  auto* pol = app.add_subcommand("polarization", "thermal polarization");
  double pol_field = 11.7, pol_temp = 300.0, pol_measured = 0.0;
  pol->add_option("--field", pol_field, "field (T)");
  pol->add_option("--temperature", pol_temp, "temperature (K)");
  pol->add_option("--measured", pol_measured,
                  "measured polarization for the enhancement factor");

  auto* cal = app.add_subcommand("calibrate", "calibrate relaxation to targets");
  std::string cal_system, cal_out;
  double cal_t1 = 0.0, cal_ts = 0.0, cal_fraction = 0.3;
  bool cal_binding = false;
  cal->add_option("--system", cal_system, "system file")->required();
  cal->add_option("--t1", cal_t1, "T1 target (s)")->required();
  cal->add_option("--ts", cal_ts, "TS target (s)")->required();
  cal->add_flag("--binding", cal_binding,
                "calibrate the binding model on top of [relaxation]");
  cal->add_option("--fraction", cal_fraction, "bound fraction for --binding");
  cal->add_option("-o,--output", cal_out, "write the updated system file here");

  auto* bld = app.add_subcommand("buildup", "fit a polarization buildup curve");
  std::string bld_curve;
  bld->add_option("--curve", bld_curve, "curve CSV file")->required();

  for (auto* sub : app.get_subcommands({}))
    sub->add_flag("--porcelain", porcelain,
                  "machine-readable key=value output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_system, sim_seq, sim_variable, sim_start,
                          sim_stop, sim_points, sim_lock_amp, sim_formula,
                          sim_out);
    if (dfs->parsed()) return cmd_dfs(dfs_system, porcelain);
    if (fit->parsed()) return cmd_fit(fit_curve, fit_model, porcelain);
    if (con->parsed()) return cmd_contrast(con_free, con_obs, porcelain);
    if (tim->parsed()) return cmd_timings(tim_j, tim_dnu, porcelain);
    if (pol->parsed())
      return cmd_polarization(pol_field, pol_temp, pol_measured, porcelain);
    if (cal->parsed())
      return cmd_calibrate(cal_system, cal_t1, cal_ts, cal_binding,
                           cal_fraction, cal_out, porcelain);
    if (bld->parsed()) return cmd_fit(bld_curve, "buildup", porcelain);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}
