#include "spinsim/relaxation.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

namespace spinsim {

void RelaxationModel::validate() const {
  if (!(tau_c > 0.0)) throw std::invalid_argument("tau_c must be positive");
  if (random_field_rate < 0.0)
    throw std::invalid_argument("random_field_rate must be non-negative");
  if (larmor_rad_s < 0.0)
    throw std::invalid_argument("larmor frequency must be non-negative");
}

void BindingModel::validate() const {
  if (bound_fraction < 0.0 || bound_fraction > 1.0)
    throw std::invalid_argument("bound fraction must lie in [0,1]");
  if (bound_extra_random_field_rate < 0.0)
    throw std::invalid_argument("bound extra rate must be non-negative");
  if (!(bound_tau_c > 0.0))
    throw std::invalid_argument("bound tau_c must be positive");
}

double dipolar_coupling_constant(double distance_m, double gyromagnetic_ratio) {
  if (!(distance_m > 0.0))
    throw std::invalid_argument("distance must be positive");
  return -constants::mu0_over_4pi * constants::hbar * gyromagnetic_ratio *
         gyromagnetic_ratio / (distance_m * distance_m * distance_m);
}

double spectral_density(double omega, double tau_c) {
  if (!(tau_c > 0.0)) throw std::invalid_argument("tau_c must be positive");
  return 2.0 * tau_c / (1.0 + omega * omega * tau_c * tau_c);
}

namespace {

// vec(M rho) = (I ox M) vec, vec(rho M) = (M^T ox I) vec  (column-major).
Matrix commutator_superoperator(const Matrix& m) {
  const int d = static_cast<int>(m.rows());
  const Matrix id = Matrix::Identity(d, d);
  return Eigen::kroneckerProduct(id, m).eval() -
         Eigen::kroneckerProduct(m.transpose(), id).eval();
}

}  // namespace

Matrix double_commutator_superoperator(const Matrix& a, const Matrix& b) {
  return commutator_superoperator(a) * commutator_superoperator(b);
}

Matrix dipolar_redfield_superoperator(const SpinSystem& system,
                                      const RelaxationModel& model) {
  model.validate();
  const int d = system.dim();
  Matrix r = Matrix::Zero(d * d, d * d);

  std::vector<std::pair<int, int>> pairs = model.dipolar_pairs_active;
  if (pairs.empty())
    for (const auto& p : system.dipolar_pairs) pairs.emplace_back(p.i, p.j);

  // c_m = 2/5 for all m: isotropic rotational-diffusion second moments
  // <|F_2m|^2> = (6/5) b^2 together with the one-sided cosine transform
  // j(w) = J(w)/2.  Locked against the brute-force oracle and the
  // like-spin extreme-narrowing T1 in the tests.
  constexpr double c_m = 2.0 / 5.0;
  for (const auto& [i, j] : pairs) {
    const auto& pr = system.pair(i, j);
    const double b = dipolar_coupling_constant(pr.distance_m,
                                               system.gyromagnetic_ratio);
    const auto t = dipolar_tensor_components(system, i, j);
    for (int m = -2; m <= 2; ++m) {
      const Matrix& t2m = t[m + 2];
      const double jw =
          spectral_density(std::abs(m) * model.larmor_rad_s, model.tau_c);
      r -= 1.5 * b * b * c_m * jw *
           double_commutator_superoperator(t2m, t2m.adjoint());
    }
  }
  return r;
}

Matrix random_field_superoperator(const SpinSystem& system, double rate) {
  if (rate < 0.0) throw std::invalid_argument("rate must be non-negative");
  const int d = system.dim();
  Matrix r = Matrix::Zero(d * d, d * d);
  if (rate == 0.0) return r;
  for (int i = 0; i < system.n_spins; ++i) {
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
      const Matrix op = single_spin_operator(system, i, a);
      r -= rate * double_commutator_superoperator(op, op);
    }
  }
  return r;
}

Liouvillian assemble_liouvillian(const SpinSystem& system, const Matrix& h,
                                 const std::vector<Matrix>& relaxation_terms) {
  const int d = system.dim();
  if (h.rows() != d || h.cols() != d)
    throw std::invalid_argument("Hamiltonian dimension mismatch");
  Liouvillian l;
  l.hilbert_dim = d;
  l.generator = Complex(0, -1) * commutator_superoperator(h);
  for (const auto& r : relaxation_terms) {
    if (r.rows() != d * d || r.cols() != d * d)
      throw std::invalid_argument("relaxation superoperator dimension mismatch");
    l.generator += r;
  }
  return l;
}

Matrix relaxation_superoperator(const SpinSystem& system,
                                const RelaxationModel& model) {
  return dipolar_redfield_superoperator(system, model) +
         random_field_superoperator(system, model.random_field_rate);
}

DfsBasis decoherence_free_subspace(const Liouvillian& relaxation_generator,
                                   double tol) {
  const Matrix& r = relaxation_generator.generator;
  const int d = relaxation_generator.hilbert_dim;
  Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double scale = sv.size() ? sv(0) : 0.0;

  DfsBasis basis;
  if (scale <= tol) {
    // zero generator: everything is long-lived
    basis.dimension = d * d;
    basis.gap = 0.0;
    for (int k = 0; k < d * d; ++k) {
      Matrix m = Matrix::Zero(d, d);
      m(k % d, k / d) = 1.0;
      basis.operators.push_back(m);
    }
    return basis;
  }

  const double cut = tol * scale;
  int null_dim = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) <= cut) ++null_dim;
  if (null_dim == 0)
    throw std::runtime_error("relaxation generator has no null space at this tolerance");
  if (null_dim == sv.size())
    throw std::runtime_error("tolerance does not separate the spectrum");
  const double smallest_kept = sv(sv.size() - null_dim - 1);
  const double largest_dropped = sv(sv.size() - null_dim);
  if (smallest_kept < 10.0 * cut)
    throw std::runtime_error(
        "singular-value gap at the null-space cut is below 10x the tolerance");
  basis.gap = smallest_kept / std::max(largest_dropped, 1e-300);
  basis.dimension = null_dim;
  for (int k = sv.size() - null_dim; k < sv.size(); ++k) {
    Vector v = svd.matrixV().col(k);
    basis.operators.push_back(Eigen::Map<const Matrix>(v.data(), d, d));
  }
  return basis;
}

Matrix exchange_averaged_superoperator(const SpinSystem& system,
                                       const RelaxationModel& free_model,
                                       const BindingModel& binding) {
  binding.validate();
  const double f = binding.bound_fraction;
  const Matrix r_free = relaxation_superoperator(system, free_model);
  if (f == 0.0) return r_free;
  RelaxationModel bound = free_model;
  bound.tau_c = binding.bound_tau_c;
  bound.random_field_rate =
      free_model.random_field_rate + binding.bound_extra_random_field_rate;
  const Matrix r_bound = relaxation_superoperator(system, bound);
  return (1.0 - f) * r_free + f * r_bound;
}

}  // namespace spinsim
