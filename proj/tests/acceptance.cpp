// End-to-end acceptance checks.  Each numbered block prints a single
// PASS/FAIL line; the process exits nonzero if any block fails.
// Usage: acceptance <data-dir>

#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>

#include "spinsim/analysis.hpp"
#include "spinsim/seqlang.hpp"
#include "spinsim/sweep.hpp"

using namespace spinsim;

namespace {

SpinSystem aaxx_system() {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(4, 4);
  j(0, 1) = j(1, 0) = 8.0;
  j(2, 3) = j(3, 2) = 8.0;
  return make_spin_system(4, {0.0, 190.0, 190.0, 0.0}, j,
                          {{0, 1, 2.48e-10}, {2, 3, 2.48e-10}});
}

const double w0 = constants::gamma_proton * 11.7;

int failures = 0;

void criterion(int number, const std::string& name,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("%s %d: %s%s%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string data_dir = argc > 1 ? argv[1] : "data";
  const SpinSystem sys = aaxx_system();
  const int d = sys.dim();

  Matrix sp_op = singlet_projector(sys, 0, 1) + singlet_projector(sys, 2, 3);
  sp_op -= sp_op.trace() / double(d) * Matrix::Identity(d, d);

  const Matrix dip_gen =
      dipolar_redfield_superoperator(sys, RelaxationModel{5e-11, {}, 0.0, w0});
  Liouvillian dip_l;
  dip_l.hilbert_dim = d;
  dip_l.generator = dip_gen;
  const DfsBasis dfs = decoherence_free_subspace(dip_l);

  criterion(1, "singlet pair state is decoherence-free", [&](std::string& out) {
    const DensityState rho = singlet_pair_state(sys, {0, 1}, {2, 3}, 0.2);
    double worst = 0.0;
    for (auto pr : {std::pair<int, int>{0, 1}, std::pair<int, int>{2, 3}}) {
      const auto t = dipolar_tensor_components(sys, pr.first, pr.second);
      for (int m = 0; m < 5; ++m)
        worst = std::max(worst,
                         (rho.rho * t[m] - t[m] * rho.rho).cwiseAbs().maxCoeff());
    }
    Matrix sub = rho.rho - Matrix::Identity(d, d) / double(d);
    Vector v = Eigen::Map<const Vector>(sub.data(), d * d);
    Vector res = v;
    for (const auto& op : dfs.operators) {
      Eigen::Map<const Vector> b(op.data(), d * d);
      res -= b * b.dot(v);
    }
    const double proj_res = res.norm() / v.norm();
    out = fmt("max commutator %.1e, projection residual %.1e", worst, proj_res);
    return worst < 1e-12 && proj_res < 1e-10;
  });

  criterion(2, "relaxation null space equals the brute-force commutant",
            [&](std::string& out) {
    std::vector<Matrix> gens;
    for (auto pr : {std::pair<int, int>{0, 1}, std::pair<int, int>{2, 3}})
      for (const auto& tm :
           dipolar_tensor_components(sys, pr.first, pr.second))
        gens.push_back(tm);
    Matrix stacked(d * d * gens.size(), d * d);
    const Matrix id = Matrix::Identity(d, d);
    for (size_t g = 0; g < gens.size(); ++g)
      stacked.middleRows(d * d * g, d * d) =
          Eigen::kroneckerProduct(id, gens[g]).eval() -
          Eigen::kroneckerProduct(gens[g].transpose(), id).eval();
    Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
    qr.setThreshold(1e-10);
    const int commutant = d * d - static_cast<int>(qr.rank());
    out = fmt("null space %.0f, commutant %.0f", dfs.dimension, commutant);
    return dfs.dimension == commutant;
  });

  CalibrationResult thermal, dnp;
  BindingCalibrationResult bcd;
  criterion(3, "calibration closure for all three scenarios",
            [&](std::string& out) {
    thermal = calibrate_relaxation(sys, {5.3, 15.0}, w0);
    dnp = calibrate_relaxation(sys, {7.4, 18.0}, w0);
    bcd = calibrate_binding(sys, dnp.model, {4.7, 9.6});
    auto within = [](double got, double want) {
      return std::abs(got / want - 1.0) < 0.005;
    };
    const double ratio = thermal.achieved_ts / thermal.achieved_t1;
    const bool monotone = bcd.binding.bound_tau_c >= dnp.model.tau_c &&
                          bcd.binding.bound_extra_random_field_rate >= 0.0;
    out = fmt("TS/T1 %.3f, bcd reached with bound tau_c %.2e s", ratio,
              bcd.binding.bound_tau_c);
    return within(thermal.achieved_t1, 5.3) && within(thermal.achieved_ts, 15.0) &&
           within(dnp.achieved_t1, 7.4) && within(dnp.achieved_ts, 18.0) &&
           within(bcd.achieved_t1, 4.7) && within(bcd.achieved_ts, 9.6) &&
           std::abs(ratio - 2.8) < 0.1 && monotone;
  });

  criterion(4, "binding contrast regression", [&](std::string& out) {
    const double c1 = contrast(7.4, 4.7), cs = contrast(18.0, 9.6);
    out = fmt("C(T1) %.3f, C(TS) %.3f", c1, cs);
    return std::abs(c1 - 0.223) < 0.005 && std::abs(cs - 0.304) < 0.005;
  });

  criterion(5, "polarization arithmetic", [&](std::string& out) {
    const double p = thermal_polarization(11.7, 300.0);
    const double e17 = enhancement_factor(6.8e-4, 11.7, 300.0);
    const double e039 = enhancement_factor(0.0025, 0.39, 300.0);
    out = fmt("p %.3e, enhancement %.2f, 0.39 T %.0f (reported 1740)", p,
              e17, e039);
    return std::abs(p / 4.0e-5 - 1.0) < 0.02 && std::abs(e17 - 17.0) < 0.5 &&
           std::abs(e039 / 1740.0 - 1.0) < 0.10;
  });

  TimingSet opt_timings;
  criterion(6, "preparation timing formulas and optimizer", [&](std::string& out) {
    const TimingSet f = compute_m2s_timings(8.0, 190.0);
    if (f.t1 != 0.03125) {
      out = "t1 formula deviates from 31.25 ms";
      return false;
    }
    TimingRanges ranges{0.9 * f.t1, 1.1 * f.t1, 0.7 * f.t2, 1.05 * f.t2,
                        0.15 * f.t3, 1.05 * f.t3};
    const TimingOptimum opt = optimize_timings(sys, ranges, 8);
    opt_timings = opt.timings;
    double oracle = -1e300;
    const int n = 12;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          oracle = std::max(
              oracle,
              preparation_objective(
                  sys,
                  {ranges.t1_lo + (ranges.t1_hi - ranges.t1_lo) * a / (n - 1),
                   ranges.t2_lo + (ranges.t2_hi - ranges.t2_lo) * b / (n - 1),
                   ranges.t3_lo + (ranges.t3_hi - ranges.t3_lo) * c / (n - 1)}));
    out = fmt("objective %.4f, fine-grid oracle %.4f", opt.objective, oracle);
    return opt.objective >= preparation_objective(sys, f) &&
           opt.objective >= 0.999 * oracle;
  });

  criterion(7, "fit robustness", [&](std::string& out) {
    bool ok = true;
    for (double T : {5.3, 15.0}) {
      std::mt19937 rng(2024);
      std::normal_distribution<double> gauss;
      DecayCurve clean, noisy;
      for (int k = 0; k < 20; ++k) {
        const double t = 4.0 * T * k / 19.0;
        clean.times.push_back(t);
        clean.amplitudes.push_back(std::exp(-t / T));
        noisy.times.push_back(t);
        noisy.amplitudes.push_back(std::exp(-t / T) + 0.02 * gauss(rng));
      }
      ok = ok && std::abs(fit_exponential(clean).lifetime / T - 1.0) < 0.001;
      ok = ok && std::abs(fit_exponential(noisy).lifetime / T - 1.0) < 0.05;
    }
    // fit versus eigenmode rate on a simulated lock sweep
    const Matrix r = relaxation_superoperator(sys, thermal.model);
    Liouvillian l;
    l.hilbert_dim = d;
    l.generator = r;
    const EigenmodeRate mode = eigenmode_rate(l, sp_op);
    Engine engine = Engine::with_relaxation(sys, r);
    SweepOptions options;
    options.timings = opt_timings;
    options.lock_amplitude_hz = 20000.0;
    for (int k = 0; k < 8; ++k) options.grid.push_back(60.0 + 12.0 * k);
    const FitResult fit = fit_exponential(sweep_simulate(engine, options));
    out = fmt("sweep fit %.3f s vs eigenmode %.3f s", fit.lifetime,
              1.0 / mode.rate);
    return ok && std::abs(fit.lifetime * mode.rate - 1.0) < 0.02;
  });

  criterion(8, "singlet encoding and lifetime ordering", [&](std::string& out) {
    const Matrix h = coherent_hamiltonian(sys);
    Engine coherent = Engine::coherent(sys);
    auto excess_at = [&](double p) {
      DensityState rho = thermal_state(sys, p);
      const double d90 = constants::pi / 2.0;
      rho = apply_hard_pulse(sys, rho, {d90, 0.0});
      rho = evolve_interval(coherent, rho, opt_timings.t1);
      rho = apply_hard_pulse(sys, rho, {2 * d90, d90});
      rho = evolve_interval(coherent, rho, opt_timings.t2);
      rho = apply_hard_pulse(sys, rho, {d90, 2 * d90});
      rho = evolve_interval(coherent, rho, opt_timings.t3);
      return ((sp_op + Matrix::Identity(d, d) * 8.0 / d) * rho.rho)
                 .trace()
                 .real() -
             8.0 / d;
    };
    const double slope = excess_at(1e-2) / 1e-2;
    bool linear = slope > 0.0;
    for (double p : {1e-4, 1e-3})
      linear = linear && std::abs(excess_at(p) / p / slope - 1.0) < 0.01;

    const Matrix r = relaxation_superoperator(sys, thermal.model);
    Engine lock_engine = Engine::with_relaxation(sys, r);
    SweepOptions lock;
    lock.timings = opt_timings;
    lock.lock_amplitude_hz = 20000.0;
    for (int k = 0; k < 8; ++k) lock.grid.push_back(60.0 + 12.0 * k);
    const double ts_fit =
        fit_exponential(sweep_simulate(lock_engine, lock)).lifetime;

    const DensityState eq = thermal_state(sys, 1e-2);
    Engine ir_engine = Engine::with_relaxation(sys, r, eq.rho);
    SweepOptions ir;
    ir.variable = SweepVariable::IrDelay;
    for (int k = 0; k < 14; ++k) ir.grid.push_back(0.3 + 1.5 * k);
    const double t1_fit =
        fit_inversion_recovery(sweep_simulate(ir_engine, ir)).lifetime;
    out = fmt("conversion slope %.3f, TS %.2f s > T1 %.2f s", slope, ts_fit,
              t1_fit);
    return slope > 0.9 && linear && ts_fit > t1_fit;
  });

  criterion(9, "parser totality and round trips", [&](std::string& out) {
    std::mt19937 rng(4242);
    std::uniform_int_distribution<int> len(0, 160);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int iter = 0; iter < 10000; ++iter) {
      std::string text;
      const int n = len(rng);
      for (int k = 0; k < n; ++k) {
        int c = byte(rng);
        if (k > 0 && k % 29 == 0) c = '\n';
        text.push_back(static_cast<char>(c));
      }
      try {
        parse_system(text);
      } catch (const ParseError&) {
      }
      try {
        parse_sequence(text);
      } catch (const ParseError&) {
      }
    }
    auto slurp = [](const std::string& path) {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open " + path);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    for (const char* name : {"pcba-thermal-300K.sys", "pcba-dnp-343K.sys",
                             "pcba-dnp-bcd.sys", "pcba-bare.sys"}) {
      const std::string canonical =
          serialize_system(parse_system(slurp(data_dir + "/" + name)));
      if (serialize_system(parse_system(canonical)) != canonical) {
        out = std::string("round trip failed for ") + name;
        return false;
      }
    }
    const TimingSet t = compute_m2s_timings(8.0, 190.0);
    const std::map<std::string, double> params{
        {"t1", t.t1}, {"t2", t.t2}, {"t3", t.t3}};
    for (const char* name : {"singlet-locking.seq", "inversion-recovery.seq"}) {
      const std::string canonical = serialize_sequence(
          parse_sequence(slurp(data_dir + "/" + name), params));
      if (serialize_sequence(parse_sequence(canonical)) != canonical) {
        out = std::string("round trip failed for ") + name;
        return false;
      }
    }
    out = "10000 fuzzed inputs, all shipped files round-trip";
    return true;
  });

  return failures == 0 ? 0 : 1;
}
