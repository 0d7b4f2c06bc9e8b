#pragma once

namespace spinsim::constants {

// CODATA 2018
inline constexpr double gamma_proton = 2.6752218744e8;  // rad s^-1 T^-1
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double k_boltzmann = 1.380649e-23;     // J K^-1
inline constexpr double mu0_over_4pi = 1e-7;            // T m A^-1 / (4 pi)

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

}  // namespace spinsim::constants
