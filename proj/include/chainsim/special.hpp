#pragma once

#include <cmath>
#include <cstdlib>

#include "chainsim/errors.hpp"

namespace chainsim {

// 1F2(3/2; 5/2, 3; -x^2), the angular form factor of a current ring coupled
// to bulk phonons. The series alternates, and in double precision the
// cancellation destroys it well before x ~ 10, so terms are accumulated in
// __float128 (software quad, arithmetic only -- no libquadmath calls).
// Against 50-digit reference values the result is exact to double precision
// for x <= 20 and within ~1e-11 relative at x = 30. Beyond 30 callers should
// switch to the quadrature route; ring_form_factor throws if pushed past 30.
inline constexpr double ring_form_factor_series_limit = 30.0;

inline double ring_form_factor(double x) {
    if (!(x >= 0.0)) throw ConfigError("ring_form_factor: argument must be >= 0");
    if (x > ring_form_factor_series_limit)
        throw ConvergenceError("ring_form_factor: series unreliable past x = 30, use the quadrature route", x);
    const __float128 z = -static_cast<__float128>(x) * static_cast<__float128>(x);
    __float128 term = 1.0;
    __float128 sum = 1.0;
    for (int n = 0; n < 400; ++n) {
        const __float128 num = static_cast<__float128>(n) + 1.5;
        const __float128 den = (static_cast<__float128>(n) + 2.5) *
                               (static_cast<__float128>(n) + 3.0) *
                               (static_cast<__float128>(n) + 1.0);
        term *= (num / den) * z;
        const __float128 prev = sum;
        sum += term;
        if (sum == prev && n > 4) break;
    }
    return static_cast<double>(sum);
}

inline double bessel_j0(double x) { return std::cyl_bessel_j(0.0, x); }
inline double bessel_j1(double x) { return std::cyl_bessel_j(1.0, x); }

// Concurrence -> entanglement of formation conversion helper:
// binary entropy of (1 + sqrt(1 - C^2))/2 in bits.
inline double binary_entropy_bits(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

}  // namespace chainsim
