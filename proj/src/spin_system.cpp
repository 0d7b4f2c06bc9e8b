#include "spinsim/spin_system.hpp"

#include <cmath>
#include <stdexcept>

namespace spinsim {

void SpinSystem::validate() const {
  if (n_spins <= 0) throw std::invalid_argument("n_spins must be positive");
  if (n_spins > max_spins)
    throw std::invalid_argument("n_spins exceeds the hard cap of 8");
  if (static_cast<int>(offsets_hz.size()) != n_spins)
    throw std::invalid_argument("offsets_hz length must equal n_spins");
  if (j_hz.rows() != n_spins || j_hz.cols() != n_spins)
    throw std::invalid_argument("j_hz must be n_spins x n_spins");
  for (int i = 0; i < n_spins; ++i) {
    if (j_hz(i, i) != 0.0)
      throw std::invalid_argument("j_hz diagonal must be zero");
    for (int j = 0; j < n_spins; ++j) {
      if (!std::isfinite(j_hz(i, j)))
        throw std::invalid_argument("j_hz entries must be finite");
      if (j_hz(i, j) != j_hz(j, i))
        throw std::invalid_argument("j_hz must be symmetric");
    }
    if (!std::isfinite(offsets_hz[i]))
      throw std::invalid_argument("offsets must be finite");
  }
  for (const auto& p : dipolar_pairs) {
    if (p.i < 0 || p.j < 0 || p.i >= n_spins || p.j >= n_spins)
      throw std::invalid_argument("dipolar pair index out of range");
    if (p.i == p.j)
      throw std::invalid_argument("dipolar pair indices must be distinct");
    if (!(p.distance_m > 0.0))
      throw std::invalid_argument("dipolar distance must be positive");
  }
  if (!(gyromagnetic_ratio > 0.0))
    throw std::invalid_argument("gyromagnetic ratio must be positive");
}

bool SpinSystem::has_pair(int i, int j) const {
  for (const auto& p : dipolar_pairs)
    if ((p.i == i && p.j == j) || (p.i == j && p.j == i)) return true;
  return false;
}

const DipolarPair& SpinSystem::pair(int i, int j) const {
  for (const auto& p : dipolar_pairs)
    if ((p.i == i && p.j == j) || (p.i == j && p.j == i)) return p;
  throw std::invalid_argument("dipolar pair (" + std::to_string(i) + "," +
                              std::to_string(j) + ") not registered");
}

SpinSystem make_spin_system(int n_spins, std::vector<double> offsets_hz,
                            Eigen::MatrixXd j_hz,
                            std::vector<DipolarPair> pairs) {
  SpinSystem s;
  s.n_spins = n_spins;
  s.offsets_hz = std::move(offsets_hz);
  s.j_hz = std::move(j_hz);
  s.dipolar_pairs = std::move(pairs);
  s.validate();
  return s;
}

}  // namespace spinsim
