#pragma once

#include <numbers>

namespace iondetect::constants {

// CODATA 2018, 10 significant digits.
inline constexpr double bohr_magneton = 9.274010078e-24;   // J/T
inline constexpr double hbar = 1.054571817e-34;            // J s
inline constexpr double planck = 6.626070150e-34;          // J s

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace iondetect::constants
