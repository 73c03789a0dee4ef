#pragma once

#include <cmath>
#include <string>

#include "chainsim/errors.hpp"
#include "chainsim/quadrature.hpp"
#include "chainsim/special.hpp"
#include "chainsim/units.hpp"

namespace chainsim {

// Phonon environment seen by the SQUID rings: bulk transverse acoustic modes
// of the substrate, coupled to each ring through the angular momentum the
// circulating current carries. Geometry and material inputs are SI; every
// frequency crossing the API is rad/ns and every output rate is 1/ns.
struct BathSpec {
    double temperature_ghz = 0.0;  // k_B T / h
    double radius_m = 0.0;         // ring radius R
    double current_a = 0.0;        // circulating current I
    double density_kg_m3 = 0.0;    // substrate mass density
    double sound_speed_m_s = 0.0;  // transverse sound speed
    double spacing_over_r = 4.0;   // neighbour separation d in units of R

    void validate() const {
        if (!(temperature_ghz >= 0.0) || !std::isfinite(temperature_ghz))
            throw ConfigError("BathSpec: temperature must be >= 0");
        if (!(radius_m > 0.0)) throw ConfigError("BathSpec: radius must be > 0");
        // I = 0 is legal: it decouples the chain from the bath entirely.
        if (!(current_a >= 0.0) || !std::isfinite(current_a))
            throw ConfigError("BathSpec: current must be >= 0");
        if (!(density_kg_m3 > 0.0)) throw ConfigError("BathSpec: density must be > 0");
        if (!(sound_speed_m_s > 0.0)) throw ConfigError("BathSpec: sound speed must be > 0");
        if (!(spacing_over_r > 0.0)) throw ConfigError("BathSpec: spacing must be > 0");
    }

    // Sound crossing time of one ring, ns.
    double tau_ring_ns() const { return radius_m / sound_speed_m_s * 1e9; }
    // Sound travel time between sites j and k (1-based), ns.
    double tau_pair_ns(int j, int k) const {
        return spacing_over_r * radius_m * std::abs(j - k) / sound_speed_m_s * 1e9;
    }
};

namespace detail {

// Prefactor of the w^5 closed form (SI, yields a rate in 1/s for w in rad/s).
inline double prefactor_w5(const BathSpec& b) {
    const double c = b.sound_speed_m_s;
    return electron_mass_kg * electron_mass_kg * b.current_a * b.current_a *
           std::pow(b.radius_m, 4) /
           (6.0 * hbar_SI * elementary_charge_C * elementary_charge_C * b.density_kg_m3 *
            std::pow(c, 5));
}

// Prefactor of the w^3 * angular-integral form (same density, different split).
inline double prefactor_w3(const BathSpec& b) {
    const double c = b.sound_speed_m_s;
    return electron_mass_kg * electron_mass_kg * b.current_a * b.current_a * b.radius_m *
           b.radius_m /
           (4.0 * pi * hbar_SI * elementary_charge_C * elementary_charge_C * b.density_kg_m3 *
            std::pow(c, 3));
}

}  // namespace detail

// Angular overlap integral of two rings seen through the phonon field:
//   Theta(x; y) = int_0^pi dtheta sin(theta) J1(x sin theta)^2 * 2 pi J0(y sin theta)
// with x = w tau_ring and y = w tau_pair. The y = 0 case reduces to
// 2 pi x^2 / 3 * 1F2(3/2; 5/2, 3; -x^2).
inline double theta_factor(double x, double y, double rel_tol = 1e-8) {
    if (x == 0.0) return 0.0;
    auto f = [&](double th) {
        const double s = std::sin(th);
        const double j1 = bessel_j1(x * s);
        return s * j1 * j1 * two_pi * bessel_j0(y * s);
    };
    // The small-x envelope is (2 pi / 3) x^2; scale the absolute tolerance
    // with it so tiny integrals are still resolved in relative terms.
    const double envelope = two_pi / 3.0 * std::min(1.0, x * x);
    const double abs_tol = std::max(envelope * rel_tol, 1e-18);
    return integrate(f, 0.0, pi, abs_tol).value;
}

struct SpectralValue {
    double omega_radns = 0.0;
    double value = 0.0;     // 1/ns
    bool series = true;     // false when the quadrature fallback was used
};

// Single-ring effective spectral density (coupling constants absorbed):
// exact closed form C5 w^5 1F2(3/2;5/2,3;-(w tau_R)^2); past the reliable
// range of the alternating series it falls back to the angular quadrature.
inline SpectralValue effective_spectral_density(const BathSpec& bath, double w_radns) {
    bath.validate();
    if (!(w_radns >= 0.0)) throw ConfigError("effective_spectral_density: omega must be >= 0");
    if (w_radns == 0.0) return {0.0, 0.0, true};
    const double w_si = w_radns * 1e9;
    const double x = w_si * (bath.radius_m / bath.sound_speed_m_s);
    if (x <= ring_form_factor_series_limit) {
        const double v = detail::prefactor_w5(bath) * std::pow(w_si, 5) * ring_form_factor(x);
        return {w_radns, v * 1e-9, true};
    }
    const double v = detail::prefactor_w3(bath) * std::pow(w_si, 3) * theta_factor(x, 0.0);
    return {w_radns, v * 1e-9, false};
}

// Small-ring (w tau_R << 1) limit: C5 w^5.
inline double small_ring_density(const BathSpec& bath, double w_radns) {
    bath.validate();
    const double w_si = std::abs(w_radns) * 1e9;
    return detail::prefactor_w5(bath) * std::pow(w_si, 5) * 1e-9;
}

// Large-ring (w tau_R >> 1) limit: the ring radius drops to a single power.
inline double large_ring_density(const BathSpec& bath, double w_radns) {
    bath.validate();
    const double w_si = std::abs(w_radns) * 1e9;
    const double c = bath.sound_speed_m_s;
    return electron_mass_kg * electron_mass_kg * bath.current_a * bath.current_a *
           bath.radius_m * w_si * w_si /
           (2.0 * hbar_SI * elementary_charge_C * elementary_charge_C * bath.density_kg_m3 *
            c * c) *
           1e-9;
}

// Two-ring cross density through the angular quadrature (oracle route; also
// the only honest answer between the asymptotic regimes).
inline double cross_spectral_density_quadrature(const BathSpec& bath, double w_radns, int j,
                                                int k) {
    bath.validate();
    if (w_radns == 0.0) return 0.0;
    const double w_si = std::abs(w_radns) * 1e9;
    const double x = w_si * (bath.radius_m / bath.sound_speed_m_s);
    const double y = w_si * (bath.spacing_over_r * bath.radius_m *
                             std::abs(j - k) / bath.sound_speed_m_s);
    return detail::prefactor_w3(bath) * std::pow(w_si, 3) * theta_factor(x, y) * 1e-9;
}

// Separation regimes for a qubit pair at a given transition frequency.
inline constexpr double collective_cut = 0.1;    // w tau_jk below: rings beat as one
inline constexpr double independent_cut = 10.0;  // w tau_jk above: cross terms wash out

enum class PairRegime { Same, Collective, Independent, Intermediate };

inline const char* to_string(PairRegime r) {
    switch (r) {
        case PairRegime::Same: return "same";
        case PairRegime::Collective: return "collective";
        case PairRegime::Independent: return "independent";
        default: return "intermediate";
    }
}

inline PairRegime pair_regime(const BathSpec& bath, double w_radns, int j, int k) {
    if (j == k) return PairRegime::Same;
    const double wt = std::abs(w_radns) * bath.tau_pair_ns(j, k);
    if (wt < collective_cut) return PairRegime::Collective;
    if (wt > independent_cut) return PairRegime::Independent;
    return PairRegime::Intermediate;
}

// Thermal weights. With y = hbar w / k_B T (w > 0):
//   emission_weight   = coth(y/2) + 1 = 2 / (1 - e^-y)   (downhill)
//   absorption_weight = coth(y/2) - 1 = 2 / (e^y - 1)    (uphill)
// computed through expm1 so their ratio is e^-y to machine precision.
inline double emission_weight(double temperature_ghz, double w_radns) {
    if (temperature_ghz == 0.0) return 2.0;
    const double y = thermal_exponent(w_radns, temperature_ghz);
    return 2.0 / (-std::expm1(-y));
}

inline double absorption_weight(double temperature_ghz, double w_radns) {
    if (temperature_ghz == 0.0) return 0.0;
    const double y = thermal_exponent(w_radns, temperature_ghz);
    return 2.0 / std::expm1(y);
}

inline double thermal_occupation(double temperature_ghz, double w_radns) {
    return 0.5 * absorption_weight(temperature_ghz, w_radns);
}

inline double thermal_coth(double temperature_ghz, double w_radns) {
    // coth(hbar w / 2 k_B T) = 1 + 2 N(w)
    return 1.0 + absorption_weight(temperature_ghz, w_radns);
}

// w * coth(hbar w / 2 k_B T) with the w -> 0 limit (2 k_B T / hbar) built in.
inline double omega_coth(double temperature_ghz, double w_radns) {
    const double limit = 2.0 * two_pi * temperature_ghz;
    if (w_radns == 0.0) return limit;
    const double y = thermal_exponent(w_radns, temperature_ghz);
    if (y < 1e-8) return limit;  // expm1 fine, but the limit is exact here anyway
    return w_radns * thermal_coth(temperature_ghz, w_radns);
}

// Damping (odd in w) and diffusion (even in w) halves of the bath kernel.
inline double damping_coefficient(const BathSpec& bath, double w_radns) {
    if (w_radns == 0.0) return 0.0;
    const double g = effective_spectral_density(bath, std::abs(w_radns)).value;
    return 0.5 * pi * g * (w_radns > 0 ? 1.0 : -1.0);
}

inline double diffusion_coefficient(const BathSpec& bath, double w_radns) {
    if (w_radns == 0.0) return 0.0;  // g ~ w^5 beats the 1/w divergence of coth
    const double g = effective_spectral_density(bath, std::abs(w_radns)).value;
    return 0.5 * pi * g * thermal_coth(bath.temperature_ghz, std::abs(w_radns));
}

}  // namespace chainsim
