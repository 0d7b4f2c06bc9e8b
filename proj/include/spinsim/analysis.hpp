#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spinsim/relaxation.hpp"

namespace spinsim {

struct DecayCurve {
  std::vector<double> times;       // s, strictly increasing
  std::vector<double> amplitudes;  // arbitrary units
  std::vector<double> sigma;       // optional per-point noise, empty or same length
  std::vector<std::pair<std::string, std::string>> metadata;

  void validate() const;
};

struct FitResult {
  double lifetime = 0.0;         // s
  double lifetime_stderr = 0.0;  // s
  double amplitude = 0.0;        // A, M_inf or P_inf depending on model
  double offset = 0.0;           // c for exp, kappa for inversion-recovery, 0 for buildup
  std::string model;             // "exp", "inversion-recovery", "buildup"
  double rms_residual = 0.0;
};

// A exp(-t/T) + c
FitResult fit_exponential(const DecayCurve& curve);
// M_inf (1 - 2 kappa exp(-t/T))
FitResult fit_inversion_recovery(const DecayCurve& curve);
// P_inf (1 - exp(-t/tau)), forced through zero at t = 0
FitResult fit_buildup(const DecayCurve& curve);

struct EigenmodeRate {
  double rate = 0.0;     // s^-1, decay rate -Re(lambda)
  double overlap = 0.0;  // fraction of the mode operator carried by the reported mode
  bool ambiguous = false;
};

// Decay rate of the generator eigenmode (eigenvalue cluster) with the
// largest overlap onto mode_operator.  Below 60% single-cluster overlap the
// result is flagged ambiguous and is the overlap-weighted average rate.
EigenmodeRate eigenmode_rate(const Liouvillian& liouvillian,
                             const Matrix& mode_operator);

// |T_free - T_obs| / (T_free + T_obs)
double contrast(double t_free, double t_obs);

// p = tanh(hbar gamma B / (2 kB T)) for protons.
double thermal_polarization(double field_t, double temperature_k);

double enhancement_factor(double polarization, double field_t,
                          double temperature_k);

struct CalibrationTargets {
  double t1 = 0.0;  // s
  double ts = 0.0;  // s
};

struct CalibrationResult {
  RelaxationModel model;
  double achieved_t1 = 0.0;
  double achieved_ts = 0.0;
};

// tau_c_hi sits at the spectral-density maximum (w0 tau ~ 0.6 at 11.7 T);
// beyond it T1 grows with tau_c again and bisection loses its bracket.
struct CalibrationBounds {
  double tau_c_lo = 1e-13, tau_c_hi = 2e-10;
  double rate_lo = 0.0, rate_hi = 10.0;
};

// Nested bisection on (tau_c, random_field_rate) so the simulated T1
// (total-Iz eigenmode) and TS (singlet-pair eigenmode) match the targets
// within rel_tol.  Throws std::runtime_error when no root lies in bounds.
CalibrationResult calibrate_relaxation(const SpinSystem& system,
                                       const CalibrationTargets& targets,
                                       double larmor_rad_s,
                                       const CalibrationBounds& bounds = {},
                                       double rel_tol = 5e-4);

struct BindingCalibrationResult {
  BindingModel binding;
  double achieved_t1 = 0.0;
  double achieved_ts = 0.0;
};

// Given a calibrated free model, find (bound_tau_c, bound_extra_rate) at a
// fixed bound fraction reproducing the shorter bound-scenario lifetimes.
// Both parameters only ever increase relative to the free model.
BindingCalibrationResult calibrate_binding(const SpinSystem& system,
                                           const RelaxationModel& free_model,
                                           const CalibrationTargets& targets,
                                           double bound_fraction = 0.3,
                                           double rel_tol = 5e-4);

// Simulated lifetimes of a relaxation generator: T1 from the total-Iz mode,
// TS from the identity-subtracted singlet-pair mode.
std::pair<double, double> simulated_lifetimes(const SpinSystem& system,
                                              const Matrix& relaxation_superop);

}  // namespace spinsim
