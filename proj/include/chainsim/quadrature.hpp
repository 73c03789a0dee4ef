#pragma once

#include <cmath>
#include <functional>

#include "chainsim/errors.hpp"

namespace chainsim {

// Adaptive Gauss-Kronrod 15(7) with interval bisection. Plenty for the
// smooth, mildly oscillatory integrands here (products of Bessel functions
// over a finite angle range).
namespace detail {

// Kronrod-15 nodes on [-1, 1] (symmetric; only the non-negative half stored)
// and weights, plus the embedded Gauss-7 weights on the shared nodes.
inline constexpr double gk15_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
inline constexpr double gk15_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
inline constexpr double gk15_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct PanelResult {
    double value;
    double error;
};

template <class F>
PanelResult gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * gk15_nodes[i]);
        fv[14 - i] = f(c + h * gk15_nodes[i]);
    }
    fv[7] = f(c);
    double kron = 0.0, gauss = 0.0;
    for (int i = 0; i < 7; ++i) kron += gk15_wk[i] * (fv[i] + fv[14 - i]);
    kron += gk15_wk[7] * fv[7];
    // Gauss-7 points are the odd-indexed Kronrod nodes.
    for (int i = 0; i < 3; ++i) gauss += gk15_wg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    gauss += gk15_wg[3] * fv[7];
    const double value = kron * h;
    const double err = std::abs((kron - gauss) * h);
    return {value, err};
}

}  // namespace detail

struct QuadResult {
    double value;
    double error_estimate;
    int panels;
};

// Integrate f over [a, b] to the requested absolute tolerance; throws
// ConvergenceError carrying the achieved error estimate on failure.
template <class F>
QuadResult integrate(const F& f, double a, double b, double abs_tol = 1e-10,
                     int max_depth = 48) {
    struct Frame {
        double a, b;
        int depth;
    };
    double total = 0.0, err_total = 0.0;
    int panels = 0;
    // Explicit stack; worst cases stay shallow but guard anyway.
    Frame stack[2048];
    int top = 0;
    stack[top++] = {a, b, 0};
    while (top > 0) {
        const Frame fr = stack[--top];
        const auto r = detail::gk15(f, fr.a, fr.b);
        ++panels;
        // Per-panel budget proportional to the panel width.
        const double budget = abs_tol * (fr.b - fr.a) / (b - a);
        if (r.error <= budget || fr.depth >= max_depth) {
            if (r.error > budget && fr.depth >= max_depth)
                throw ConvergenceError("integrate: panel refinement exhausted", r.error);
            total += r.value;
            err_total += r.error;
            continue;
        }
        if (top + 2 > 2048) throw ConvergenceError("integrate: subdivision stack overflow", r.error);
        const double m = 0.5 * (fr.a + fr.b);
        stack[top++] = {fr.a, m, fr.depth + 1};
        stack[top++] = {m, fr.b, fr.depth + 1};
    }
    if (err_total > abs_tol * 4.0)
        throw ConvergenceError("integrate: requested tolerance not met", err_total);
    return {total, err_total, panels};
}

}  // namespace chainsim
