#pragma once

#include <array>
#include <string>

#include "spinsim/spin_system.hpp"

namespace spinsim {

enum class Axis { X, Y, Z, Plus, Minus };

/// Density matrix plus a label.  check_invariants verifies Hermiticity,
/// unit trace and (optionally) positivity; linearized high-temperature
/// states can have negative eigenvalues at large polarization, so the
/// positivity check is separate.
struct DensityState {
  Matrix rho;
  std::string label;

  void check_invariants(bool require_positive = true) const;
};

bool is_hermitian(const Matrix& m, double tol = 1e-12);

// Basis convention: spin 0 is the most significant tensor factor and
// |0> is m=+1/2, so single-spin Iz = diag(+1/2, -1/2).
Matrix single_spin_operator(const SpinSystem& system, int spin, Axis axis);

// H = sum_i 2*pi*delta_i Iz_i + sum_{i<j} 2*pi*J_ij (Ix Ix + Iy Iy + Iz Iz),
// rad/s, full isotropic (strong-coupling) form.
Matrix coherent_hamiltonian(const SpinSystem& system);

// Normalized rank-2 spherical tensor operators T_{2,m}, m = -2..2
// (index 0 is m=-2).  Exchange-symmetric under i<->j.
std::array<Matrix, 5> dipolar_tensor_components(const SpinSystem& system,
                                                int i, int j);

// Projector onto the two-spin singlet (|01>-|10>)/sqrt(2) of the pair,
// identity elsewhere: P = I/4 - Ii.Ij.
Matrix singlet_projector(const SpinSystem& system, int i, int j);

// Eq.-style singlet pair state on a 4-spin system, renormalized to unit
// trace (the raw operator has trace 4+4*eps).
DensityState singlet_pair_state(const SpinSystem& system,
                                std::pair<int, int> pair_a,
                                std::pair<int, int> pair_b, double epsilon);

// Linearized high-temperature Zeeman state with <Iz_i> = p/2 per spin.
DensityState thermal_state(const SpinSystem& system, double polarization);

}  // namespace spinsim
