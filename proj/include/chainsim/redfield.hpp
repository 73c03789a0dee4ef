#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chainsim/bath.hpp"
#include "chainsim/chain.hpp"
#include "chainsim/errors.hpp"
#include "chainsim/linalg.hpp"

namespace chainsim {

enum class CouplingMode { Auto, Independent, Collective };

inline const char* to_string(CouplingMode m) {
    switch (m) {
        case CouplingMode::Auto: return "auto";
        case CouplingMode::Independent: return "independent";
        default: return "collective";
    }
}

inline CouplingMode coupling_mode_from_string(const std::string& s) {
    if (s == "auto") return CouplingMode::Auto;
    if (s == "independent") return CouplingMode::Independent;
    if (s == "collective") return CouplingMode::Collective;
    throw ConfigError("unknown coupling mode '" + s + "' (auto|independent|collective)");
}

// Golden-rule rate kernel. gamma(j,k)(a,b) is the thermal transition kernel
// Gamma_jk for the ordered eigenpair (a,b), with w_ab = E_b - E_a:
//   w_ab > 0 (b above a): (pi/2) g_jk(w) (coth + 1)   -- emission, flow b -> a
//   w_ab < 0 (b below a): (pi/2) g_jk(|w|) (coth - 1) -- absorption
//   degenerate pair: 0 (the w^5 density kills the zero-frequency kernel)
struct RateTable {
    int n_sites = 0;
    int dim = 0;
    std::vector<RMat> gamma;  // index j * n_sites + k (0-based sites)
    bool quadrature_fallback = false;

    struct RegimeTag {
        int j, k;          // 1-based sites, j < k
        double omega;      // representative transition frequency, rad/ns
        double omega_tau;  // |w| tau_jk
        PairRegime regime;
    };
    std::vector<RegimeTag> tags;

    const RMat& gamma_at(int j, int k) const { return gamma[(j - 1) * n_sites + (k - 1)]; }
};

// Build the full Gamma tensor for every site pair and eigenpair.
// In auto mode each (j, k, w) combination that actually enters the equation
// (the k-site flip has a matrix element there) must fall cleanly into the
// collective or independent asymptotic regime; anything in between aborts.
inline RateTable transition_rates(const EigenSystem& es, const BathSpec& bath,
                                  CouplingMode mode) {
    bath.validate();
    const int n = es.spec.n_sites;
    const int d = es.dim;
    const double wtol = es.cluster_tol();
    const auto ops = site_flip_operators(es);

    RateTable rt;
    rt.n_sites = n;
    rt.dim = d;
    rt.gamma.assign(static_cast<size_t>(n) * n, RMat::Zero(d, d));

    // Same-site spectral density at each distinct transition frequency,
    // cached (the quadrature fallback is not free).
    struct Cached {
        double w;
        SpectralValue sv;
    };
    std::vector<Cached> cache;
    auto density = [&](double w_abs) -> SpectralValue {
        for (const auto& c : cache)
            if (std::abs(c.w - w_abs) <= wtol) return c.sv;
        const SpectralValue sv = effective_spectral_density(bath, w_abs);
        cache.push_back({w_abs, sv});
        if (!sv.series) rt.quadrature_fallback = true;
        return sv;
    };

    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            const double w = es.energies(b) - es.energies(a);
            if (std::abs(w) <= wtol) continue;  // kernel vanishes at zero frequency
            const double w_abs = std::abs(w);
            const double weight = (w > 0) ? emission_weight(bath.temperature_ghz, w_abs)
                                          : absorption_weight(bath.temperature_ghz, w_abs);
            for (int j = 1; j <= n; ++j) {
                for (int k = 1; k <= n; ++k) {
                    double g = 0.0;
                    if (j == k) {
                        g = density(w_abs).value;
                    } else {
                        switch (mode) {
                            case CouplingMode::Independent: g = 0.0; break;
                            case CouplingMode::Collective: g = density(w_abs).value; break;
                            case CouplingMode::Auto: {
                                // Only pairs the k-flip actually connects matter.
                                if (std::abs(ops[k - 1](a, b)) <= 1e-12) { g = 0.0; break; }
                                const PairRegime r = pair_regime(bath, w_abs, j, k);
                                if (r == PairRegime::Collective) {
                                    g = density(w_abs).value;
                                } else if (r == PairRegime::Independent) {
                                    g = 0.0;
                                } else {
                                    const double wt = w_abs * bath.tau_pair_ns(j, k);
                                    std::ostringstream msg;
                                    msg << "transition_rates: site pair (" << j << "," << k
                                        << ") at transition frequency " << radns_to_ghz(w_abs)
                                        << " GHz has omega*tau = " << wt
                                        << ", in the intermediate window between the collective (<"
                                        << collective_cut << ") and independent (>"
                                        << independent_cut
                                        << ") regimes; pick coupling_mode explicitly";
                                    throw IntermediateRegimeError(msg.str(), wt);
                                }
                                break;
                            }
                        }
                    }
                    rt.gamma[(j - 1) * n + (k - 1)](a, b) = 0.5 * pi * g * weight;
                }
            }
        }
    }

    // Regime tags for reporting: distinct |w| clusters that carry at least
    // one flip matrix element, classified for every distinct site pair.
    std::vector<double> freqs;
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            double x2 = 0.0;
            for (const auto& op : ops) x2 += op(a, b) * op(a, b);
            if (x2 <= 1e-24) continue;
            const double w = std::abs(es.energies(b) - es.energies(a));
            bool seen = false;
            for (double f : freqs)
                if (std::abs(f - w) <= wtol) { seen = true; break; }
            if (!seen) freqs.push_back(w);
        }
    }
    std::sort(freqs.begin(), freqs.end());
    for (int j = 1; j <= n; ++j)
        for (int k = j + 1; k <= n; ++k)
            for (double w : freqs)
                rt.tags.push_back({j, k, w, w * bath.tau_pair_ns(j, k),
                                   pair_regime(bath, w, j, k)});
    return rt;
}

// Which generator entries survive the rotating-wave filter: a source pair
// (b, g) feeds a target pair (a, d) iff their oscillation frequencies agree,
//   |(E_a - E_b) - (E_d - E_g)| < tol.
// Population-to-population entries (a = d, b = g) always pass.
struct SecularFilter {
    RVec energies;
    double tol = 1e-6;  // rad/ns, absolute

    bool retained(int a, int d, int b, int g) const {
        return std::abs((energies(a) - energies(b)) - (energies(d) - energies(g))) < tol;
    }
    double mismatch(int a, int d, int b, int g) const {
        return (energies(a) - energies(b)) - (energies(d) - energies(g));
    }
};

inline SecularFilter secular_filter(const EigenSystem& es, double tol = 1e-6) {
    if (!(tol > 0.0)) throw ConfigError("secular_filter: tolerance must be > 0");
    return SecularFilter{es.energies, tol};
}

// The interaction-picture matrix-element equation, four contraction patterns
// over the flip operators and the rate kernel. Everything is real: the flip
// matrix elements are real in this eigenbasis and the kernel is real, so the
// superoperator acts on Re(rho) and Im(rho) independently.
struct Generator {
    int dim = 0;
    RVec energies;
    RMat matrix;  // dim^2 x dim^2, acting on vec(rho) with index a*dim+d
    double secular_tol = 0.0;

    // Contributions dropped by the rotating-wave filter, grouped by their
    // oscillation frequency: the unfiltered equation is
    //   L(t) = matrix + sum_m exp(i domega_m t) dropped[m].matrix
    struct OscillatingTerm {
        double domega;
        RMat matrix;
    };
    std::vector<OscillatingTerm> dropped;

    double norm_inf() const { return matrix.cwiseAbs().rowwise().sum().maxCoeff(); }
};

inline Generator build_generator(const EigenSystem& es, const RateTable& rt,
                                 const SecularFilter& sec, bool collect_dropped = false) {
    const int n = es.spec.n_sites;
    const int d = es.dim;
    if (rt.dim != d || rt.n_sites != n)
        throw ConfigError("build_generator: rate table does not match the eigensystem");
    const auto ops = site_flip_operators(es);

    Generator gen;
    gen.dim = d;
    gen.energies = es.energies;
    gen.secular_tol = sec.tol;
    gen.matrix = RMat::Zero(d * d, d * d);

    auto deposit = [&](int ta, int td, int sb, int sg, double value) {
        if (value == 0.0) return;
        if (sec.retained(ta, td, sb, sg)) {
            gen.matrix(pair_index(ta, td, d), pair_index(sb, sg, d)) += value;
        } else if (collect_dropped) {
            const double dw = sec.mismatch(ta, td, sb, sg);
            for (auto& t : gen.dropped) {
                if (std::abs(t.domega - dw) < sec.tol) {
                    t.matrix(pair_index(ta, td, d), pair_index(sb, sg, d)) += value;
                    return;
                }
            }
            gen.dropped.push_back({dw, RMat::Zero(d * d, d * d)});
            gen.dropped.back().matrix(pair_index(ta, td, d), pair_index(sb, sg, d)) += value;
        }
    };

    for (int a = 0; a < d; ++a) {
        for (int dd = 0; dd < d; ++dd) {
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) {
                    const RMat& gjk = rt.gamma[j * n + k];
                    // term 1: - sum_{b, abar} Xj(a,b) Xk(b,abar) G(b,abar) rho(abar,d)
                    for (int b = 0; b < d; ++b) {
                        const double xj = ops[j](a, b);
                        if (xj == 0.0) continue;
                        for (int abar = 0; abar < d; ++abar) {
                            const double v = xj * ops[k](b, abar) * gjk(b, abar);
                            deposit(a, dd, abar, dd, -v);
                        }
                    }
                    // term 2: + sum_{b, g} Xj(a,b) Xk(g,d) G(d,g) rho(b,g)
                    for (int b = 0; b < d; ++b) {
                        const double xj = ops[j](a, b);
                        if (xj == 0.0) continue;
                        for (int g = 0; g < d; ++g)
                            deposit(a, dd, b, g, xj * ops[k](g, dd) * gjk(dd, g));
                    }
                    // term 3: + sum_{b, g} Xk(a,b) Xj(g,d) G(a,b) rho(b,g)
                    for (int b = 0; b < d; ++b) {
                        const double xk = ops[k](a, b);
                        if (xk == 0.0) continue;
                        for (int g = 0; g < d; ++g)
                            deposit(a, dd, b, g, xk * ops[j](g, dd) * gjk(a, b));
                    }
                    // term 4: - sum_{b, dbar} Xk(dbar,b) Xj(b,d) G(b,dbar) rho(a,dbar)
                    for (int dbar = 0; dbar < d; ++dbar) {
                        for (int b = 0; b < d; ++b) {
                            const double v = ops[k](dbar, b) * ops[j](b, dd) * gjk(b, dbar);
                            deposit(a, dd, a, dbar, -v);
                        }
                    }
                }
            }
        }
    }
    return gen;
}

// Total dephasing rate of the (a, d) matrix element: the negated diagonal
// of the generator (the two one-sided escape sums).
inline double decoherence_rate(const Generator& gen, int a, int d) {
    return -gen.matrix(pair_index(a, d, gen.dim), pair_index(a, d, gen.dim));
}

// Classical population-flow matrix R: R(b, a) is the rate of probability
// flowing a -> b; diagonal holds the negative escape rates, columns sum to 0.
inline RMat relaxation_rates(const EigenSystem& es, const RateTable& rt) {
    const int n = es.spec.n_sites;
    const int d = es.dim;
    const auto ops = site_flip_operators(es);
    RMat r = RMat::Zero(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            if (a == b) continue;
            double v = 0.0;
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    v += ops[j](a, b) * ops[k](b, a) * rt.gamma[j * n + k](b, a);
            r(b, a) = 2.0 * v;
        }
    }
    for (int a = 0; a < d; ++a) r(a, a) = -r.col(a).sum();
    return r;
}

// Long-time state. With an initial condition: project vec(rho0) onto the
// kernel of the generator (disconnected networks each keep their share, and
// undamped resonant coherences survive). Without one the kernel must be
// one-dimensional.
inline Mat stationary_state(const Generator& gen, const Mat* rho0 = nullptr) {
    const int d = gen.dim;
    const Eigen::Index dd = static_cast<Eigen::Index>(d) * d;
    Mat l = gen.matrix.cast<cplx>();
    Eigen::ComplexEigenSolver<Mat> solver(l);
    if (solver.info() != Eigen::Success)
        throw PhysicsError("stationary_state: eigensolver failed");
    const Vec evals = solver.eigenvalues();
    const Mat vecs = solver.eigenvectors();
    // Kernel cut must scale with the generator: rate magnitudes span many
    // decades across bath regimes, so an absolute floor would be wrong.
    const double scale = evals.cwiseAbs().maxCoeff();
    const double ktol = 1e-9 * scale;

    std::vector<Eigen::Index> kernel;
    for (Eigen::Index i = 0; i < dd; ++i)
        if (std::abs(evals(i)) < ktol) kernel.push_back(i);
    if (kernel.empty()) throw PhysicsError("stationary_state: no stationary mode found");

    Mat rho;
    if (rho0) {
        if (rho0->rows() != d || rho0->cols() != d)
            throw ConfigError("stationary_state: initial state has wrong dimension");
        // Expansion coefficients of vec(rho0) in the eigenbasis of the
        // generator; keep only the kernel modes.
        const Vec coeff = solver.eigenvectors().partialPivLu().solve(vectorize(*rho0));
        Vec v = Vec::Zero(dd);
        for (Eigen::Index i : kernel) v += coeff(i) * vecs.col(i);
        rho = unvectorize(v, d);
    } else {
        if (kernel.size() > 1)
            throw PhysicsError(
                "stationary_state: degenerate null space (" + std::to_string(kernel.size()) +
                " stationary modes); supply an initial state to resolve it");
        rho = unvectorize(vecs.col(kernel[0]), d);
        const cplx tr = rho.trace();
        if (std::abs(tr) < 1e-12)
            throw PhysicsError("stationary_state: stationary mode carries no trace");
        rho /= tr;
    }
    rho = 0.5 * (rho + rho.adjoint()).eval();

    const double resid = (gen.matrix.cast<cplx>() * vectorize(rho)).norm();
    const double ref = std::max(1.0, vectorize(rho).norm()) * std::max(scale, 1e-300);
    if (resid > 1e-7 * ref)
        throw ConvergenceError("stationary_state: projected state is not stationary", resid / ref);
    return rho;
}

}  // namespace chainsim
