#pragma once

#include <Eigen/Dense>
#include <complex>

namespace chainsim {

using Mat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using cplx = std::complex<double>;

inline Mat dagger(const Mat& m) { return m.adjoint(); }

// Column-major stacking index for superoperators acting on vec(rho):
// rho(a, d) lives at vec index a * dim + d (row-major pair order, fixed
// convention shared by the generator builder and the propagators).
inline Eigen::Index pair_index(Eigen::Index a, Eigen::Index d, Eigen::Index dim) {
    return a * dim + d;
}

inline Vec vectorize(const Mat& rho) {
    const Eigen::Index d = rho.rows();
    Vec v(d * d);
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) v(pair_index(a, b, d)) = rho(a, b);
    return v;
}

inline Mat unvectorize(const Vec& v, Eigen::Index dim) {
    Mat rho(dim, dim);
    for (Eigen::Index a = 0; a < dim; ++a)
        for (Eigen::Index b = 0; b < dim; ++b) rho(a, b) = v(pair_index(a, b, dim));
    return rho;
}

inline double hermiticity_defect(const Mat& rho) {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace chainsim
