#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "snlab/chebyshev.hpp"

namespace snlab::spectral {

// real operator applied to complex samples, by parts
inline Eigen::VectorXcd apply_real(const Eigen::MatrixXd& M,
                                   const Eigen::VectorXcd& v) {
    return (M * v.real()).cast<std::complex<double>>() +
           std::complex<double>(0.0, 1.0) *
               (M * v.imag()).cast<std::complex<double>>();
}

inline Eigen::MatrixXcd apply_real(const Eigen::MatrixXd& M,
                                   const Eigen::MatrixXcd& v) {
    return (M * v.real()).cast<std::complex<double>>() +
           std::complex<double>(0.0, 1.0) *
               (M * v.imag()).cast<std::complex<double>>();
}

inline Eigen::MatrixXcd apply_real_cols(const Eigen::MatrixXcd& v,
                                        const Eigen::MatrixXd& M) {
    return (v.real() * M.transpose()).cast<std::complex<double>>() +
           std::complex<double>(0.0, 1.0) *
               (v.imag() * M.transpose()).cast<std::complex<double>>();
}

/// Polar-angle machinery on a [0, pi] grid. lambda_reg is the operator
/// d2/dth2 + cot(th) d/dth with the pole rows replaced by the regular limit
/// 2 d2/dth2 (valid on fields with u_th = 0 at the poles). neumann_R maps
/// interior values to the full column, filling the pole values from the two
/// discrete Neumann conditions D1 u = 0 at theta = 0, pi.
struct ThetaOperator {
    Eigen::MatrixXd D1;
    Eigen::MatrixXd D2;
    Eigen::MatrixXd lambda_reg;
    Eigen::MatrixXd neumann_R; // (n x n-2)
};

inline ThetaOperator make_theta_operator(const ChebyshevGrid1D& g) {
    ThetaOperator op;
    op.D1 = diff_matrix(g, 1);
    op.D2 = diff_matrix(g, 2);
    const int n = g.n_points;
    op.lambda_reg = op.D2;
    op.lambda_reg.row(0) = 2.0 * op.D2.row(0);
    op.lambda_reg.row(n - 1) = 2.0 * op.D2.row(n - 1);
    for (int i = 1; i < n - 1; ++i) {
        const double c = std::cos(g.nodes[i]) / std::sin(g.nodes[i]);
        op.lambda_reg.row(i) = op.D2.row(i) + c * op.D1.row(i);
    }
    // Solve the two Neumann rows for the pole values in terms of the
    // interior ones.
    Eigen::Matrix2d A;
    A << op.D1(0, 0), op.D1(0, n - 1), op.D1(n - 1, 0), op.D1(n - 1, n - 1);
    Eigen::MatrixXd B(2, n - 2);
    B.row(0) = op.D1.row(0).segment(1, n - 2);
    B.row(1) = op.D1.row(n - 1).segment(1, n - 2);
    const Eigen::MatrixXd C = -A.partialPivLu().solve(B);
    op.neumann_R = Eigen::MatrixXd::Zero(n, n - 2);
    op.neumann_R.row(0) = C.row(0);
    op.neumann_R.row(n - 1) = C.row(1);
    op.neumann_R.block(1, 0, n - 2, n - 2).setIdentity();
    return op;
}

} // namespace snlab::spectral
