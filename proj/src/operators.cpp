#include "spinsim/operators.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

namespace spinsim {

namespace {

Matrix pauli_half(Axis axis) {
  Matrix m(2, 2);
  switch (axis) {
    case Axis::X:
      m << 0.0, 0.5, 0.5, 0.0;
      break;
    case Axis::Y:
      m << 0.0, Complex(0, -0.5), Complex(0, 0.5), 0.0;
      break;
    case Axis::Z:
      m << 0.5, 0.0, 0.0, -0.5;
      break;
    case Axis::Plus:
      m << 0.0, 1.0, 0.0, 0.0;
      break;
    case Axis::Minus:
      m << 0.0, 0.0, 1.0, 0.0;
      break;
  }
  return m;
}

}  // namespace

bool is_hermitian(const Matrix& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() < tol;
}

void DensityState::check_invariants(bool require_positive) const {
  if (!is_hermitian(rho, 1e-12))
    throw std::invalid_argument("density state is not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0)) > 1e-10)
    throw std::invalid_argument("density state trace differs from 1");
  if (require_positive) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("density state has a negative eigenvalue");
  }
}

Matrix single_spin_operator(const SpinSystem& system, int spin, Axis axis) {
  if (spin < 0 || spin >= system.n_spins)
    throw std::invalid_argument("spin index out of range");
  Matrix m = Matrix::Identity(1, 1);
  const Matrix op = pauli_half(axis);
  const Matrix id = Matrix::Identity(2, 2);
  for (int k = 0; k < system.n_spins; ++k) {
    m = Eigen::kroneckerProduct(m, k == spin ? op : id).eval();
  }
  return m;
}

Matrix coherent_hamiltonian(const SpinSystem& system) {
  system.validate();
  const int d = system.dim();
  Matrix h = Matrix::Zero(d, d);
  for (int i = 0; i < system.n_spins; ++i) {
    if (system.offsets_hz[i] != 0.0)
      h += constants::two_pi * system.offsets_hz[i] *
           single_spin_operator(system, i, Axis::Z);
  }
  for (int i = 0; i < system.n_spins; ++i) {
    for (int j = i + 1; j < system.n_spins; ++j) {
      const double jij = system.j_hz(i, j);
      if (jij == 0.0) continue;
      Matrix dot = Matrix::Zero(d, d);
      for (Axis a : {Axis::X, Axis::Y, Axis::Z})
        dot += single_spin_operator(system, i, a) *
               single_spin_operator(system, j, a);
      h += constants::two_pi * jij * dot;
    }
  }
  return h;
}

std::array<Matrix, 5> dipolar_tensor_components(const SpinSystem& system,
                                                int i, int j) {
  if (!system.has_pair(i, j))
    throw std::invalid_argument("pair not registered in system");
  const Matrix ix = single_spin_operator(system, i, Axis::X);
  const Matrix iy = single_spin_operator(system, i, Axis::Y);
  const Matrix iz = single_spin_operator(system, i, Axis::Z);
  const Matrix jx = single_spin_operator(system, j, Axis::X);
  const Matrix jy = single_spin_operator(system, j, Axis::Y);
  const Matrix jz = single_spin_operator(system, j, Axis::Z);
  const Matrix ip = ix + Complex(0, 1) * iy;
  const Matrix im = ix - Complex(0, 1) * iy;
  const Matrix jp = jx + Complex(0, 1) * jy;
  const Matrix jm = jx - Complex(0, 1) * jy;

  std::array<Matrix, 5> t;
  t[0] = 0.5 * im * jm;                                   // m = -2
  t[1] = 0.5 * (im * jz + iz * jm);                       // m = -1
  t[2] = (2.0 * iz * jz - ix * jx - iy * jy) / std::sqrt(6.0);  // m = 0
  t[3] = -0.5 * (ip * jz + iz * jp);                      // m = +1
  t[4] = 0.5 * ip * jp;                                   // m = +2
  return t;
}

Matrix singlet_projector(const SpinSystem& system, int i, int j) {
  if (i == j) throw std::invalid_argument("singlet pair indices must differ");
  if (i < 0 || j < 0 || i >= system.n_spins || j >= system.n_spins)
    throw std::invalid_argument("singlet pair index out of range");
  const int d = system.dim();
  Matrix dot = Matrix::Zero(d, d);
  for (Axis a : {Axis::X, Axis::Y, Axis::Z})
    dot += single_spin_operator(system, i, a) * single_spin_operator(system, j, a);
  return 0.25 * Matrix::Identity(d, d) - dot;
}

DensityState singlet_pair_state(const SpinSystem& system,
                                std::pair<int, int> pair_a,
                                std::pair<int, int> pair_b, double epsilon) {
  if (system.n_spins != 4)
    throw std::invalid_argument("singlet pair state requires a 4-spin system");
  if (std::abs(epsilon) > 1.0)
    throw std::invalid_argument("|epsilon| must be <= 1");
  int idx[4] = {pair_a.first, pair_a.second, pair_b.first, pair_b.second};
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if (idx[a] == idx[b])
        throw std::invalid_argument("singlet pairs must be disjoint");

  const Matrix pa = singlet_projector(system, pair_a.first, pair_a.second);
  const Matrix pb = singlet_projector(system, pair_b.first, pair_b.second);
  Matrix rho = 0.5 * epsilon * (pa + pb) + 0.25 * Matrix::Identity(16, 16);
  rho /= rho.trace().real();  // raw trace is 4 + 4 eps
  DensityState state{rho, "singlet-pair eps=" + std::to_string(epsilon)};
  return state;
}

DensityState thermal_state(const SpinSystem& system, double polarization) {
  if (std::abs(polarization) > 1.0)
    throw std::invalid_argument("|polarization| must be <= 1");
  const int d = system.dim();
  Matrix rho = Matrix::Identity(d, d) / static_cast<double>(d);
  Matrix iz_total = Matrix::Zero(d, d);
  for (int i = 0; i < system.n_spins; ++i)
    iz_total += single_spin_operator(system, i, Axis::Z);
  rho += polarization * iz_total / static_cast<double>(d / 2);
  return DensityState{rho, "thermal p=" + std::to_string(polarization)};
}

}  // namespace spinsim
