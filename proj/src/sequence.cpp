#include "spinsim/sequence.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

#include <unsupported/Eigen/MatrixFunctions>

namespace spinsim {

void SequenceProgram::validate() const {
  int acquires = 0;
  for (const auto& ev : events) {
    if (const auto* d = std::get_if<Delay>(&ev)) {
      if (d->duration < 0.0) throw std::invalid_argument("negative delay");
    } else if (const auto* l = std::get_if<Lock>(&ev)) {
      if (l->duration < 0.0) throw std::invalid_argument("negative lock duration");
      if (l->amplitude_hz < 0.0)
        throw std::invalid_argument("negative lock amplitude");
    } else if (const auto* p = std::get_if<HardPulse>(&ev)) {
      if (!std::isfinite(p->angle)) throw std::invalid_argument("pulse angle not finite");
    } else if (const auto* a = std::get_if<Acquire>(&ev)) {
      if (a->points < 1) throw std::invalid_argument("acquire needs at least one point");
      if (a->dwell < 0.0) throw std::invalid_argument("negative dwell");
      ++acquires;
    }
  }
  if (acquires > 1) throw std::invalid_argument("at most one acquire per program");
}

TimingSet compute_m2s_timings(double j_hz, double delta_nu_hz) {
  if (!(j_hz > 0.0) || !(delta_nu_hz > 0.0))
    throw std::invalid_argument("J and delta-nu must be positive");
  TimingSet t;
  t.t1 = 1.0 / (4.0 * j_hz);
  t.t2 = 1.0 / (4.0 * j_hz) + 1.0 / delta_nu_hz;
  t.t3 = 1.0 / (2.0 * delta_nu_hz);
  return t;
}

namespace {

Matrix pulse_generator(const SpinSystem& system, double phase) {
  const int d = system.dim();
  Matrix g = Matrix::Zero(d, d);
  for (int i = 0; i < system.n_spins; ++i)
    g += std::cos(phase) * single_spin_operator(system, i, Axis::X) +
         std::sin(phase) * single_spin_operator(system, i, Axis::Y);
  return g;
}

Matrix pulse_unitary(const SpinSystem& system, const HardPulse& p) {
  return (Complex(0, -1) * p.angle * pulse_generator(system, p.phase)).exp();
}

std::pair<std::pair<int, int>, std::pair<int, int>> singlet_pairs(
    const SpinSystem& system) {
  if (system.dipolar_pairs.size() >= 2)
    return {{system.dipolar_pairs[0].i, system.dipolar_pairs[0].j},
            {system.dipolar_pairs[1].i, system.dipolar_pairs[1].j}};
  return {{0, 1}, {2, 3}};
}

}  // namespace

double preparation_objective(const SpinSystem& system, const TimingSet& t,
                             double polarization) {
  if (system.n_spins != 4)
    throw std::invalid_argument("preparation objective requires a 4-spin system");
  const Matrix h = coherent_hamiltonian(system);
  const auto [pa, pb] = singlet_pairs(system);
  const Matrix proj = singlet_projector(system, pa.first, pa.second) +
                      singlet_projector(system, pb.first, pb.second);
  const double deg90 = constants::pi / 2.0;
  Matrix u = pulse_unitary(system, HardPulse{deg90, 0.0});
  u = ((Complex(0, -1) * t.t1) * h).exp() * u;
  u = pulse_unitary(system, HardPulse{2 * deg90, deg90}) * u;
  u = ((Complex(0, -1) * t.t2) * h).exp() * u;
  u = pulse_unitary(system, HardPulse{deg90, 2 * deg90}) * u;
  u = ((Complex(0, -1) * t.t3) * h).exp() * u;
  const Matrix rho0 = thermal_state(system, polarization).rho;
  const Matrix rho1 = u * rho0 * u.adjoint();
  const double baseline = proj.trace().real() / system.dim();
  return (proj * rho1).trace().real() - baseline;
}

TimingOptimum optimize_timings(const SpinSystem& system,
                               const TimingRanges& ranges,
                               int coarse_points) {
  if (!(ranges.t1_hi >= ranges.t1_lo) || !(ranges.t2_hi >= ranges.t2_lo) ||
      !(ranges.t3_hi >= ranges.t3_lo))
    throw std::invalid_argument("empty timing range");
  auto grid = [&](double lo, double hi, int k) {
    return coarse_points <= 1 || hi == lo
               ? lo
               : lo + (hi - lo) * k / double(coarse_points - 1);
  };
  TimingSet best{};
  double best_obj = -1e300;
  auto consider = [&](const TimingSet& t) {
    const double obj = preparation_objective(system, t);
    if (obj > best_obj) {
      best_obj = obj;
      best = t;
    }
  };
  for (int a = 0; a < coarse_points; ++a)
    for (int b = 0; b < coarse_points; ++b)
      for (int c = 0; c < coarse_points; ++c)
        consider({grid(ranges.t1_lo, ranges.t1_hi, a),
                  grid(ranges.t2_lo, ranges.t2_hi, b),
                  grid(ranges.t3_lo, ranges.t3_hi, c)});

  // coordinate refinement with shrinking steps
  double step1 = (ranges.t1_hi - ranges.t1_lo) / std::max(coarse_points - 1, 1);
  double step2 = (ranges.t2_hi - ranges.t2_lo) / std::max(coarse_points - 1, 1);
  double step3 = (ranges.t3_hi - ranges.t3_lo) / std::max(coarse_points - 1, 1);
  auto clamp = [](double x, double lo, double hi) {
    return std::min(std::max(x, lo), hi);
  };
  for (int iter = 0; iter < 60; ++iter) {
    bool improved = false;
    for (int dim = 0; dim < 3; ++dim) {
      const double step = dim == 0 ? step1 : dim == 1 ? step2 : step3;
      if (step <= 0.0) continue;
      for (double sgn : {+1.0, -1.0}) {
        TimingSet t = best;
        double* v = dim == 0 ? &t.t1 : dim == 1 ? &t.t2 : &t.t3;
        const double lo = dim == 0 ? ranges.t1_lo : dim == 1 ? ranges.t2_lo : ranges.t3_lo;
        const double hi = dim == 0 ? ranges.t1_hi : dim == 1 ? ranges.t2_hi : ranges.t3_hi;
        *v = clamp(*v + sgn * step, lo, hi);
        const double obj = preparation_objective(system, t);
        if (obj > best_obj) {
          best_obj = obj;
          best = t;
          improved = true;
        }
      }
    }
    if (!improved) {
      step1 *= 0.5;
      step2 *= 0.5;
      step3 *= 0.5;
      if (step1 < 1e-7 && step2 < 1e-7 && step3 < 1e-7) break;
    }
  }
  return {best, best_obj};
}

SequenceProgram singlet_locking_program(const TimingSet& timings,
                                        double lock_amplitude_hz,
                                        double lock_duration_s) {
  if (!(timings.t1 > 0.0) || !(timings.t2 > 0.0) || !(timings.t3 > 0.0))
    throw std::invalid_argument("timings must be positive");
  const double d90 = constants::pi / 2.0;
  SequenceProgram p;
  p.name = "singlet-locking";
  p.parameters = {{"t1", timings.t1}, {"t2", timings.t2}, {"t3", timings.t3},
                  {"lock_amplitude", lock_amplitude_hz},
                  {"lock_duration", lock_duration_s}};
  p.events = {
      HardPulse{d90, 0.0},        Delay{timings.t1},
      HardPulse{2 * d90, d90},    Delay{timings.t2},
      HardPulse{d90, 2 * d90},    Delay{timings.t3},
      Lock{lock_amplitude_hz, 0.0, lock_duration_s},
      Delay{timings.t3},          HardPulse{d90, 0.0},
      Delay{timings.t2},          HardPulse{2 * d90, 0.0},
      Delay{timings.t1},          Acquire{1, 1e-4},
  };
  p.validate();
  return p;
}

SequenceProgram inversion_recovery_program(double delay_s) {
  if (delay_s < 0.0) throw std::invalid_argument("delay must be non-negative");
  const double d90 = constants::pi / 2.0;
  SequenceProgram p;
  p.name = "inversion-recovery";
  p.parameters = {{"delay", delay_s}};
  p.events = {HardPulse{2 * d90, 0.0}, Delay{delay_s}, HardPulse{d90, d90},
              Acquire{1, 1e-4}};
  p.validate();
  return p;
}

struct EngineCache {
  std::optional<Matrix> free_generator;
  std::map<double, Matrix> free_propagators;
  std::map<std::tuple<double, double, double>, Matrix> lock_propagators;
};

Engine Engine::coherent(const SpinSystem& system) {
  Engine e;
  e.system = system;
  e.hamiltonian = coherent_hamiltonian(system);
  const int d = system.dim();
  e.relaxation = Matrix::Zero(d * d, d * d);
  e.cache = std::make_shared<EngineCache>();
  return e;
}

Engine Engine::with_relaxation(const SpinSystem& system,
                               const Matrix& relaxation_superop,
                               std::optional<Matrix> equilibrium) {
  Engine e;
  e.system = system;
  e.hamiltonian = coherent_hamiltonian(system);
  e.relaxation = relaxation_superop;
  e.equilibrium = std::move(equilibrium);
  e.cache = std::make_shared<EngineCache>();
  return e;
}

DensityState apply_hard_pulse(const SpinSystem& system, const DensityState& state,
                              const HardPulse& pulse) {
  const Matrix u = pulse_unitary(system, pulse);
  return {u * state.rho * u.adjoint(), state.label};
}

namespace {

Matrix propagate(const Matrix& generator, const Matrix& rho, double t,
                 const std::optional<Matrix>& equilibrium) {
  const int d = static_cast<int>(rho.rows());
  const Matrix u = (generator * t).exp();
  Eigen::Map<const Vector> v(rho.data(), d * d);
  if (equilibrium) {
    Eigen::Map<const Vector> veq(equilibrium->data(), d * d);
    Vector out = veq + u * (v - veq);
    return Eigen::Map<const Matrix>(out.data(), d, d);
  }
  Vector out = u * v;
  return Eigen::Map<const Matrix>(out.data(), d, d);
}

}  // namespace

namespace {

Matrix apply_propagator(const Matrix& prop, const Matrix& rho,
                        const std::optional<Matrix>& equilibrium) {
  const int d = static_cast<int>(rho.rows());
  Eigen::Map<const Vector> v(rho.data(), d * d);
  if (equilibrium) {
    Eigen::Map<const Vector> veq(equilibrium->data(), d * d);
    Vector out = veq + prop * (v - veq);
    return Eigen::Map<const Matrix>(out.data(), d, d);
  }
  Vector out = prop * v;
  return Eigen::Map<const Matrix>(out.data(), d, d);
}

const Matrix& free_generator(const Engine& engine) {
  auto& cache = *engine.cache;
  if (!cache.free_generator)
    cache.free_generator =
        assemble_liouvillian(engine.system, engine.hamiltonian, {engine.relaxation})
            .generator;
  return *cache.free_generator;
}

}  // namespace

DensityState evolve_interval(const Engine& engine, const DensityState& state,
                             double t) {
  if (t < 0.0) throw std::invalid_argument("evolution time must be non-negative");
  if (t == 0.0) return state;
  if (!engine.cache)
    return {propagate(assemble_liouvillian(engine.system, engine.hamiltonian,
                                           {engine.relaxation})
                          .generator,
                      state.rho, t, engine.equilibrium),
            state.label};
  auto& props = engine.cache->free_propagators;
  auto it = props.find(t);
  if (it == props.end())
    it = props.emplace(t, (free_generator(engine) * t).exp()).first;
  return {apply_propagator(it->second, state.rho, engine.equilibrium), state.label};
}

DensityState apply_lock(const Engine& engine, const DensityState& state,
                        const Lock& lock) {
  if (lock.amplitude_hz < 0.0)
    throw std::invalid_argument("lock amplitude must be non-negative");
  if (lock.duration == 0.0) return state;
  auto build = [&] {
    const Matrix h_lock =
        engine.hamiltonian + constants::two_pi * lock.amplitude_hz *
                                 pulse_generator(engine.system, lock.phase);
    const Liouvillian l =
        assemble_liouvillian(engine.system, h_lock, {engine.relaxation});
    return (l.generator * lock.duration).exp().eval();
  };
  if (!engine.cache)
    return {apply_propagator(build(), state.rho, engine.equilibrium), state.label};
  auto& props = engine.cache->lock_propagators;
  const auto key = std::make_tuple(lock.amplitude_hz, lock.phase, lock.duration);
  auto it = props.find(key);
  if (it == props.end()) it = props.emplace(key, build()).first;
  return {apply_propagator(it->second, state.rho, engine.equilibrium), state.label};
}

RunResult run_sequence(const Engine& engine, const SequenceProgram& program,
                       const DensityState& initial) {
  program.validate();
  RunResult result;
  DensityState state = initial;
  const int d = engine.system.dim();
  Matrix ip_total = Matrix::Zero(d, d);
  for (int i = 0; i < engine.system.n_spins; ++i)
    ip_total += single_spin_operator(engine.system, i, Axis::Plus);

  double acquired_at = 0.0;
  for (const auto& ev : program.events) {
    if (const auto* p = std::get_if<HardPulse>(&ev)) {
      state = apply_hard_pulse(engine.system, state, *p);
    } else if (const auto* dl = std::get_if<Delay>(&ev)) {
      state = evolve_interval(engine, state, dl->duration);
    } else if (const auto* lk = std::get_if<Lock>(&ev)) {
      state = apply_lock(engine, state, *lk);
    } else if (const auto* aq = std::get_if<Acquire>(&ev)) {
      for (int k = 0; k < aq->points; ++k) {
        if (k > 0) state = evolve_interval(engine, state, aq->dwell);
        result.sample_times.push_back(acquired_at + k * aq->dwell);
        result.samples.push_back((ip_total * state.rho).trace());
      }
    }
  }
  result.final_state = state;
  return result;
}

}  // namespace spinsim
