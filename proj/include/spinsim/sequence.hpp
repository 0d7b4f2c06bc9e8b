#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spinsim/relaxation.hpp"

namespace spinsim {

struct HardPulse {
  double angle = 0.0;  // rad
  double phase = 0.0;  // rad
};

struct Delay {
  double duration = 0.0;  // s
};

struct Lock {
  double amplitude_hz = 0.0;
  double phase = 0.0;     // rad
  double duration = 0.0;  // s
};

struct Acquire {
  int points = 1;
  double dwell = 0.0;  // s
};

using SequenceEvent = std::variant<HardPulse, Delay, Lock, Acquire>;

struct SequenceProgram {
  std::string name;
  std::vector<SequenceEvent> events;
  std::map<std::string, double> parameters;  // resolved values, seconds etc.

  void validate() const;  // durations >= 0, at most one Acquire
};

struct TimingSet {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
};

// Fig-caption formulas: t1 = 1/(4J), t2 = 1/(4J) + 1/dnu, t3 = 1/(2 dnu).
TimingSet compute_m2s_timings(double j_hz, double delta_nu_hz);

struct TimingRanges {
  double t1_lo, t1_hi;
  double t2_lo, t2_hi;
  double t3_lo, t3_hi;
};

struct TimingOptimum {
  TimingSet timings;
  double objective = 0.0;  // singlet-pair population excess after preparation
};

// Singlet-pair population excess over the maximally mixed baseline after
// the preparation block run on thermal_state(p).
double preparation_objective(const SpinSystem& system, const TimingSet& t,
                             double polarization = 1e-2);

// Coarse grid search plus coordinate refinement; result is never worse
// than the formula timings when they lie inside the ranges.
TimingOptimum optimize_timings(const SpinSystem& system,
                               const TimingRanges& ranges,
                               int coarse_points = 10);

// M2S preparation, lock, mirrored S2M readout, acquire.
// Phase convention: 90x - t1 - 180y - t2 - 90(-x) - t3 - lock(phase) -
// t3 - 90x - t2 - 180x - t1 - acquire.
SequenceProgram singlet_locking_program(const TimingSet& timings,
                                        double lock_amplitude_hz,
                                        double lock_duration_s);

// 180x - delay - 90y - acquire.
SequenceProgram inversion_recovery_program(double delay_s);

struct RunResult {
  DensityState final_state;
  std::vector<double> sample_times;
  std::vector<Complex> samples;  // <sum I+> at each acquired point
};

/// Bundles everything a sequence execution needs: the coherent Hamiltonian,
/// the relaxation generator, and an optional equilibrium state toward which
/// relaxation drives the system (drho/dt = L(rho - rho_eq) for the
/// incoherent part; rho_eq must commute with H).
struct EngineCache;

struct Engine {
  SpinSystem system;
  Matrix hamiltonian;
  Matrix relaxation;  // superoperator, may be zero
  std::optional<Matrix> equilibrium;  // density matrix

  // memoized propagators, keyed by duration; shared across copies
  std::shared_ptr<EngineCache> cache;

  static Engine coherent(const SpinSystem& system);
  static Engine with_relaxation(const SpinSystem& system,
                                const Matrix& relaxation_superop,
                                std::optional<Matrix> equilibrium = {});
};

DensityState apply_hard_pulse(const SpinSystem& system, const DensityState& state,
                              const HardPulse& pulse);

// vec(rho) -> rho_eq + exp(L t) (vec(rho) - rho_eq); plain exp(L t) when
// no equilibrium is set.
DensityState evolve_interval(const Engine& engine, const DensityState& state,
                             double t);

DensityState apply_lock(const Engine& engine, const DensityState& state,
                        const Lock& lock);

RunResult run_sequence(const Engine& engine, const SequenceProgram& program,
                       const DensityState& initial);

}  // namespace spinsim
