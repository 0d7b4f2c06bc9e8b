#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "spinsim/constants.hpp"

namespace spinsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct DipolarPair {
  int i = 0;
  int j = 0;
  double distance_m = 0.0;
};

/// Static description of a homonuclear spin-1/2 system in the rotating frame.
/// Offsets and J couplings are stored in Hz; Hamiltonians built from them
/// are in rad/s.
struct SpinSystem {
  int n_spins = 0;
  std::vector<double> offsets_hz;
  Eigen::MatrixXd j_hz;  // symmetric, zero diagonal
  std::vector<DipolarPair> dipolar_pairs;
  double gyromagnetic_ratio = constants::gamma_proton;

  static constexpr int max_spins = 8;

  int dim() const { return 1 << n_spins; }

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;

  bool has_pair(int i, int j) const;
  const DipolarPair& pair(int i, int j) const;
};

SpinSystem make_spin_system(int n_spins, std::vector<double> offsets_hz,
                            Eigen::MatrixXd j_hz,
                            std::vector<DipolarPair> pairs = {});

}  // namespace spinsim
