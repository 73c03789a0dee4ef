#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "chainsim/chain.hpp"
#include "chainsim/errors.hpp"
#include "chainsim/linalg.hpp"
#include "chainsim/special.hpp"

namespace chainsim {

// Spin-flip matrix sigma_y x sigma_y in the computational basis.
inline RMat spin_flip_matrix() {
    RMat s = RMat::Zero(4, 4);
    s(0, 3) = -1.0;
    s(1, 2) = 1.0;
    s(2, 1) = 1.0;
    s(3, 0) = -1.0;
    return s;
}

// Two-qubit concurrence, Hermitian route: eigenvalues of
// sqrt(rho) (S rho* S) sqrt(rho), which is Hermitian PSD, so a self-adjoint
// solver does all the work and negative rounding dust can be clamped.
inline double concurrence(const Mat& rho_comp) {
    if (rho_comp.rows() != 4 || rho_comp.cols() != 4)
        throw ConfigError("concurrence: expected a 4x4 two-qubit state");
    const Mat rho = 0.5 * (rho_comp + rho_comp.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    RVec w = es.eigenvalues().cwiseMax(0.0);
    const Mat sq = es.eigenvectors() * w.cwiseSqrt().asDiagonal() *
                   es.eigenvectors().adjoint();
    const RMat s = spin_flip_matrix();
    const Mat flipped = s * rho.conjugate() * s;
    Mat b = sq * flipped * sq;
    b = 0.5 * (b + b.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> eb(b);
    RVec lam = eb.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(lam.data(), lam.data() + lam.size(), std::greater<double>());
    return std::max(0.0, lam(0) - lam(1) - lam(2) - lam(3));
}

// Cross-check route: eigenvalues of the non-Hermitian product rho (S rho* S)
// are real and non-negative up to rounding; concurrence from their roots.
inline double concurrence_direct(const Mat& rho_comp) {
    if (rho_comp.rows() != 4 || rho_comp.cols() != 4)
        throw ConfigError("concurrence_direct: expected a 4x4 two-qubit state");
    const Mat rho = 0.5 * (rho_comp + rho_comp.adjoint());
    const RMat s = spin_flip_matrix();
    const Mat prod = rho * (s * rho.conjugate() * s);
    Eigen::ComplexEigenSolver<Mat> es(prod);
    if (es.info() != Eigen::Success)
        throw PhysicsError("concurrence_direct: eigensolver failed");
    RVec lam(4);
    for (int i = 0; i < 4; ++i) lam(i) = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
    std::sort(lam.data(), lam.data() + 4, std::greater<double>());
    return std::max(0.0, lam(0) - lam(1) - lam(2) - lam(3));
}

inline double eof_from_concurrence(double c) {
    c = std::clamp(c, 0.0, 1.0);
    const double x = 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c)));
    return binary_entropy_bits(x);
}

inline double entanglement_of_formation(const Mat& rho_comp) {
    return eof_from_concurrence(concurrence(rho_comp));
}

// Phase-scan entanglement bounds. The master equation fixes the magnitude
// of each eigenbasis matrix element but its lab-frame phase winds rapidly;
// scanning that phase over a uniform grid brackets the instantaneous
// entanglement between the stored samples. The grid contains theta = 0, so
// for states whose scanned coherence is the only phase carrier the lower
// bound is attained by the dephased-like configuration exactly.
struct EofBounds {
    double eof = 0.0;    // at the state's own phase
    double upper = 0.0;  // max over the phase grid
    double lower = 0.0;  // min over the phase grid
    double average = 0.0;
    int pair_a = 0, pair_d = 0;  // scanned eigenpair (sorted indices)
};

inline EofBounds eof_bounds(const EigenSystem& es, const Mat& rho_eigen, int pair_a,
                            int pair_d, int n_phases = 256) {
    if (es.spec.n_sites != 2)
        throw ConfigError("eof_bounds: entanglement of formation is tracked for 2 sites only");
    if (pair_a == pair_d || pair_a < 0 || pair_d < 0 || pair_a >= es.dim || pair_d >= es.dim)
        throw ConfigError("eof_bounds: invalid coherence pair");
    if (n_phases < 2) throw ConfigError("eof_bounds: need at least 2 phases");

    EofBounds out;
    out.pair_a = pair_a;
    out.pair_d = pair_d;
    out.eof = entanglement_of_formation(es.to_computational(rho_eigen));

    const double mag = std::abs(rho_eigen(pair_a, pair_d));
    double lo = 1.0, hi = 0.0, sum = 0.0;
    Mat work = rho_eigen;
    for (int i = 0; i < n_phases; ++i) {
        const double theta = two_pi * i / n_phases;
        const cplx c = std::polar(mag, theta);
        work(pair_a, pair_d) = c;
        work(pair_d, pair_a) = std::conj(c);
        const double e = entanglement_of_formation(es.to_computational(work));
        lo = std::min(lo, e);
        hi = std::max(hi, e);
        sum += e;
    }
    // The scanned family contains the state itself (at its own phase), so
    // the bounds always bracket the instantaneous value.
    out.lower = std::min(lo, out.eof);
    out.upper = std::max(hi, out.eof);
    out.average = sum / n_phases;
    return out;
}

// Least-squares exponential rate of an initial decay: straight-line fit of
// log|c| from the first sample until |c| has dropped by e^-2 (or the data
// ends). Returns the positive rate; needs at least ten usable samples.
inline double fit_decay(const std::vector<double>& times_ns,
                        const std::vector<double>& magnitudes) {
    if (times_ns.size() != magnitudes.size())
        throw ConfigError("fit_decay: times and magnitudes differ in length");
    if (magnitudes.empty() || !(magnitudes.front() > 1e-12))
        throw ConfigError("fit_decay: initial magnitude too small to fit");
    const double floor = std::max(magnitudes.front() * std::exp(-2.0), 1e-9);
    size_t nfit = 0;
    while (nfit < magnitudes.size() && magnitudes[nfit] > floor) ++nfit;
    if (nfit < magnitudes.size()) ++nfit;  // include the first sample past the knee
    if (nfit < 10)
        throw ConfigError("fit_decay: fewer than 10 samples in the decay window");
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (size_t i = 0; i < nfit; ++i) {
        const double t = times_ns[i];
        const double y = std::log(std::max(magnitudes[i], 1e-300));
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double n = static_cast<double>(nfit);
    const double denom = n * stt - st * st;
    if (denom <= 0.0) throw ConfigError("fit_decay: degenerate time grid");
    return -(n * sty - st * sy) / denom;
}

}  // namespace chainsim
