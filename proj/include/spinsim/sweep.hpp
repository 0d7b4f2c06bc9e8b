#pragma once

#include "spinsim/analysis.hpp"
#include "spinsim/seqlang.hpp"
#include "spinsim/sequence.hpp"

namespace spinsim {

enum class SweepVariable { LockDuration, IrDelay };

struct SweepOptions {
  SweepVariable variable = SweepVariable::LockDuration;
  std::vector<double> grid;          // s, ascending
  TimingSet timings;                 // for lock sweeps
  double lock_amplitude_hz = 2000.0;
  double polarization = 1e-2;        // initial thermal polarization
};

// One sequence execution per grid point.  Lock sweeps record |<sum I+>| at
// the first acquired point; inversion-recovery sweeps record the signed
// in-phase component.  Amplitudes are normalized to the 30-degree
// tip-pulse readout of the same scenario.
DecayCurve sweep_simulate(const Engine& engine, const SweepOptions& options);

}  // namespace spinsim
