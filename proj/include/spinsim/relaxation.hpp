#pragma once

#include <optional>
#include <vector>

#include "spinsim/operators.hpp"
#include "spinsim/spin_system.hpp"

namespace spinsim {

struct RelaxationModel {
  double tau_c = 0.0;                    // s
  std::vector<std::pair<int, int>> dipolar_pairs_active;  // empty = all registered pairs
  double random_field_rate = 0.0;        // s^-1
  double larmor_rad_s = 0.0;             // rad/s, used in spectral densities

  void validate() const;
};

struct BindingModel {
  double bound_fraction = 0.0;           // f in [0,1]
  double bound_extra_random_field_rate = 0.0;  // s^-1
  double bound_tau_c = 0.0;              // s

  void validate() const;
};

/// Generator acting on column-major vectorized density matrices.
struct Liouvillian {
  int hilbert_dim = 0;
  Matrix generator;  // hilbert_dim^2 square

  int dim() const { return hilbert_dim * hilbert_dim; }
};

// b = -(mu0/4pi) hbar gamma^2 / r^3, rad/s.
double dipolar_coupling_constant(double distance_m, double gyromagnetic_ratio);

// Lorentzian J(w) = 2 tau_c / (1 + w^2 tau_c^2).
double spectral_density(double omega, double tau_c);

// Superoperator for rho -> [A, [B, rho]] in the column-major vec convention.
Matrix double_commutator_superoperator(const Matrix& a, const Matrix& b);

// Secular intramolecular dipolar Redfield generator,
//   R(rho) = -(3/2) b^2 sum_m c_m J(m w0) [T2m, [T2m^dag, rho]],
// with c_m = 2/5 for every m from the isotropic rotational-diffusion
// second moments.  This reproduces the like-spin extreme-narrowing
// result 1/T1 = (3/2) b^2 tau_c.
Matrix dipolar_redfield_superoperator(const SpinSystem& system,
                                      const RelaxationModel& model);

// Uncorrelated per-spin isotropic fluctuating-field generator
//   R(rho) = -k sum_i sum_a [Ia_i, [Ia_i, rho]].
Matrix random_field_superoperator(const SpinSystem& system, double rate);

// L = -i (I ox H - H^T ox I) + sum_k R_k  (column-major vec).
Liouvillian assemble_liouvillian(const SpinSystem& system, const Matrix& h,
                                 const std::vector<Matrix>& relaxation_terms);

// Convenience: full relaxation generator of a model (dipolar + random field).
Matrix relaxation_superoperator(const SpinSystem& system,
                                const RelaxationModel& model);

struct DfsBasis {
  int dimension = 0;
  std::vector<Matrix> operators;  // Hilbert-Schmidt orthonormal
  double gap = 0.0;               // smallest kept / largest dropped singular value
};

// Null space of a relaxation-only generator.  Throws if the singular-value
// spectrum has no gap of at least 10x tol at the cut.
DfsBasis decoherence_free_subspace(const Liouvillian& relaxation_generator,
                                   double tol = 1e-10);

// Fast-exchange average: (1-f) R(free) + f R(bound), where R(bound) uses
// bound_tau_c and the free random-field rate plus the bound extra rate.
Matrix exchange_averaged_superoperator(const SpinSystem& system,
                                       const RelaxationModel& free_model,
                                       const BindingModel& binding);

}  // namespace spinsim
