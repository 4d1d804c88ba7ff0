#pragma once

namespace gedanken {

// Exact SI values (2019 redefinition).
struct PhysicalConstants {
  double h = 6.62607015e-34;  // Planck constant, J*s
  double c = 299792458.0;     // speed of light in vacuum, m/s
};

inline constexpr PhysicalConstants kConstants{};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace gedanken
