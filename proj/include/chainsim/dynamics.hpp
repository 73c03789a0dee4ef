#pragma once

#include <cmath>
#include <vector>

#include "chainsim/chain.hpp"
#include "chainsim/errors.hpp"
#include "chainsim/linalg.hpp"
#include "chainsim/redfield.hpp"
#include "chainsim/units.hpp"

namespace chainsim {

inline double trace_distance(const Mat& a, const Mat& b) {
    Mat diff = a - b;
    diff = 0.5 * (diff + diff.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> s(diff);
    return 0.5 * s.eigenvalues().cwiseAbs().sum();
}

// Largest violation of |rho_ab|^2 <= rho_aa rho_bb over all pairs
// (positive semidefiniteness implies none beyond rounding).
inline double coherence_bound_violation(const Mat& rho) {
    double worst = 0.0;
    for (Eigen::Index a = 0; a < rho.rows(); ++a)
        for (Eigen::Index b = a + 1; b < rho.cols(); ++b)
            worst = std::max(worst, std::norm(rho(a, b)) -
                                        rho(a, a).real() * rho(b, b).real());
    return worst;
}

inline Mat gibbs_state(const EigenSystem& es, double temperature_ghz) {
    if (!(temperature_ghz > 0.0))
        throw ConfigError("gibbs_state: temperature must be > 0");
    const double e0 = es.energies.minCoeff();
    RVec p(es.dim);
    for (int i = 0; i < es.dim; ++i)
        p(i) = std::exp(-(es.energies(i) - e0) / (two_pi * temperature_ghz));
    p /= p.sum();
    Mat rho = Mat::Zero(es.dim, es.dim);
    for (int i = 0; i < es.dim; ++i) rho(i, i) = p(i);
    return rho;
}

struct EvolveOptions {
    double t_max_ns = 0.0;
    double dt_ns = 0.0;            // 0 -> automatic from the generator norm
    long long output_stride = 0;   // 0 -> automatic (~max_samples stored)
    long long max_samples = 2000;
    long long min_steps = 1000;
    double stability_limit = 0.1;   // required: dt * ||L||_inf below this
    double auto_step_target = 0.02; // automatic dt aims at this * 1/||L||_inf
};

struct Diagnostics {
    double dt_ns = 0.0;
    long long steps = 0;
    long long stride = 1;
    double trace_drift = 0.0;        // max |tr rho - 1| over stored samples
    double hermiticity_defect = 0.0;
    double min_population_eigenvalue = 0.0;
    double coherence_bound = 0.0;    // max |rho_ab|^2 - rho_aa rho_bb
    bool positivity_flag = false;    // min eigenvalue dipped below -1e-7
};

struct Trajectory {
    std::vector<double> times_ns;
    std::vector<Mat> states;  // interaction-picture matrices, eigenbasis
    Diagnostics diag;

    const Mat& final_state() const { return states.back(); }
};

// Classic fixed-step RK4 on vec(rho). The generator is real, so the real
// and imaginary parts propagate independently through the same matrix.
inline Trajectory evolve(const Generator& gen, const Mat& rho0, const EvolveOptions& opt) {
    const int d = gen.dim;
    if (rho0.rows() != d || rho0.cols() != d)
        throw ConfigError("evolve: initial state dimension mismatch");
    if (!(opt.t_max_ns > 0.0)) throw ConfigError("evolve: t_max must be > 0");

    const double lnorm = gen.norm_inf();
    double dt = opt.dt_ns;
    if (dt <= 0.0) {
        dt = (lnorm > 0.0) ? opt.auto_step_target / lnorm : opt.t_max_ns / opt.min_steps;
        dt = std::min(dt, opt.t_max_ns / static_cast<double>(opt.min_steps));
    }
    if (dt * lnorm >= opt.stability_limit)
        throw PhysicsError("evolve: dt * ||generator|| = " + std::to_string(dt * lnorm) +
                           " exceeds the stability guard " +
                           std::to_string(opt.stability_limit));
    const long long steps = static_cast<long long>(std::ceil(opt.t_max_ns / dt - 1e-9));
    dt = opt.t_max_ns / static_cast<double>(steps);  // land exactly on t_max

    long long stride = opt.output_stride;
    if (stride <= 0) stride = std::max<long long>(1, (steps + opt.max_samples - 1) / opt.max_samples);

    const Eigen::Index dd = static_cast<Eigen::Index>(d) * d;
    RVec yr(dd), yi(dd);
    {
        const Vec y0 = vectorize(rho0);
        yr = y0.real();
        yi = y0.imag();
    }

    Trajectory traj;
    traj.diag.dt_ns = dt;
    traj.diag.steps = steps;
    traj.diag.stride = stride;
    traj.diag.min_population_eigenvalue = 1.0;

    const RMat& l = gen.matrix;
    RVec k1(dd), k2(dd), k3(dd), k4(dd), tmp(dd);

    auto record = [&](long long step) {
        Vec y(dd);
        y.real() = yr;
        y.imag() = yi;
        Mat rho = unvectorize(y, d);
        traj.times_ns.push_back(step * dt);
        traj.states.push_back(rho);
        traj.diag.trace_drift =
            std::max(traj.diag.trace_drift, std::abs(rho.trace().real() - 1.0) +
                                                std::abs(rho.trace().imag()));
        traj.diag.hermiticity_defect =
            std::max(traj.diag.hermiticity_defect, hermiticity_defect(rho));
        Eigen::SelfAdjointEigenSolver<Mat> s(0.5 * (rho + rho.adjoint()));
        traj.diag.min_population_eigenvalue =
            std::min(traj.diag.min_population_eigenvalue, s.eigenvalues().minCoeff());
        traj.diag.coherence_bound =
            std::max(traj.diag.coherence_bound, coherence_bound_violation(rho));
    };

    record(0);
    auto rk4 = [&](RVec& y) {
        k1.noalias() = l * y;
        tmp = y + (0.5 * dt) * k1;
        k2.noalias() = l * tmp;
        tmp = y + (0.5 * dt) * k2;
        k3.noalias() = l * tmp;
        tmp = y + dt * k3;
        k4.noalias() = l * tmp;
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    for (long long step = 1; step <= steps; ++step) {
        rk4(yr);
        rk4(yi);
        if (step % stride == 0 || step == steps) record(step);
    }
    traj.diag.positivity_flag = traj.diag.min_population_eigenvalue < -1e-7;
    return traj;
}

// Undo the interaction picture for one stored sample: multiply each matrix
// element by its oscillation phase to recover the lab-frame state.
inline Mat lab_frame_state(const Generator& gen, const Mat& rho_tilde, double t_ns) {
    const int d = gen.dim;
    Mat out(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            const double phase = -(gen.energies(a) - gen.energies(b)) * t_ns;
            out(a, b) = rho_tilde(a, b) * std::polar(1.0, phase);
        }
    return out;
}

}  // namespace chainsim
