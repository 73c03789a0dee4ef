#pragma once

// Unit conventions used throughout:
//   - time in ns, angular frequency in rad/ns, hbar = 1 (energies are rad/ns)
//   - user-facing frequencies in GHz mean E/h, so E[rad/ns] = 2*pi * f[GHz]
//   - temperature in GHz means k_B*T/h, so hbar*w / k_B*T = w[rad/ns] / (2*pi*T[GHz])
//   - bath geometry/material inputs are SI; spectral densities convert to 1/ns at the boundary

#include <cmath>

namespace chainsim {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

// CODATA SI constants (exact where the SI defines them so)
inline constexpr double electron_mass_kg = 9.1093837015e-31;
inline constexpr double elementary_charge_C = 1.602176634e-19;
inline constexpr double hbar_SI = 1.054571817e-34;

inline constexpr double ghz_to_radns(double f_ghz) { return two_pi * f_ghz; }
inline constexpr double radns_to_ghz(double w_radns) { return w_radns / two_pi; }

// hbar*w / (k_B T) with w in rad/ns and T in GHz (= k_B T / h)
inline double thermal_exponent(double w_radns, double temperature_ghz) {
    return w_radns / (two_pi * temperature_ghz);
}

}  // namespace chainsim
