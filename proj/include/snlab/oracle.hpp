#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <complex>
#include <functional>

#include "snlab/chebyshev.hpp"
#include "snlab/errors.hpp"

namespace snlab::oracle {

using complexd = std::complex<double>;

/// Free spherical Gaussian bump: exact solution of i u_t = -u_rr with
/// u(0, t) = 0, centred at r = a and moving radially with velocity v.
/// Principal square root throughout (Re(sigma^2 + 2it) > 0, no branch
/// crossing for real t).
inline complexd free_gaussian(double r, double t, double sigma, double a,
                              double v, double C) {
    const complexd g(sigma * sigma, 2.0 * t);
    const complexd pref = C * std::sqrt(sigma) / std::sqrt(g);
    const complexd ivr(0.0, 0.5 * v * r);
    const complexd ivt(0.0, 0.25 * v * v * t);
    const double out = r - v * t - a;
    const double img = r + v * t + a;
    const complexd term1 = std::exp(-out * out / (2.0 * g) + ivr - ivt);
    const complexd term2 = std::exp(-img * img / (2.0 * g) - ivr - ivt);
    return pref * (term1 - term2);
}

/// C making the t = 0 profile carry unit probability on the given grid.
inline double normalize_gaussian(double sigma, double a, double v,
                                 const spectral::ChebyshevGrid1D& grid) {
    double p = 0.0;
    for (int j = 0; j < grid.n_points; ++j)
        p += grid.quad_weights[j] *
             std::norm(free_gaussian(grid.nodes[j], 0.0, sigma, a, v, 1.0));
    if (!(p > 0.0))
        throw std::invalid_argument("normalize_gaussian: degenerate profile");
    return 1.0 / std::sqrt(p);
}

/// One Cartesian factor of a free 2D Gaussian: solves i psi_t = -psi_xx on
/// the line (unnormalized).
inline complexd free_gaussian_1d(double x, double t, double sigma, double x0,
                                 double v) {
    const complexd g(sigma * sigma, 2.0 * t);
    const double c = x - v * t - x0;
    const complexd phase(0.0, 0.5 * v * x - 0.25 * v * v * t);
    return std::exp(-c * c / (2.0 * g) + phase) / std::sqrt(g);
}

/// Separable free 2D Gaussian moving with velocity (v, 0), unnormalized.
inline complexd free_gaussian_planar(double x, double y, double t, double sigma,
                                     double x0, double y0, double v) {
    return free_gaussian_1d(x, t, sigma, x0, v) *
           free_gaussian_1d(y, t, sigma, y0, 0.0);
}

namespace detail {

// 4-point Lagrange (cubic) interpolation on a uniform grid.
inline double cubic_uniform(const Eigen::VectorXd& values, double h, double x) {
    const int n = static_cast<int>(values.size());
    int i = static_cast<int>(std::floor(x / h)) - 1;
    i = std::max(0, std::min(i, n - 4));
    double result = 0.0;
    for (int k = 0; k < 4; ++k) {
        double lk = 1.0;
        const double xk = (i + k) * h;
        for (int m = 0; m < 4; ++m) {
            if (m == k) continue;
            const double xm = (i + m) * h;
            lk *= (x - xm) / (xk - xm);
        }
        result += lk * values[i + k];
    }
    return result;
}

} // namespace detail

/// Second-order finite-difference reference for the radial Poisson problem:
/// v'' = density(r)/r on a uniform fine grid, v(0) = v(L) = 0, Thomas solve,
/// phi = v/r with phi(0) = v'(0) (one-sided second order). Result sampled at
/// eval_r by cubic interpolation.
inline Eigen::VectorXd fd_poisson_radial(
    const std::function<double(double)>& density, double L, int n_fine,
    const Eigen::VectorXd& eval_r) {
    if (n_fine < 1000)
        throw std::invalid_argument("fd_poisson_radial: n_fine must be >= 1000");
    const int n = n_fine;
    const double h = L / (n - 1);
    const int ni = n - 2;
    Eigen::VectorXd rhs(ni);
    for (int j = 0; j < ni; ++j) {
        const double r = (j + 1) * h;
        rhs[j] = h * h * density(r) / r;
    }
    // tridiagonal v_{j-1} - 2 v_j + v_{j+1} = h^2 f_j
    Eigen::VectorXd c(ni), d(ni);
    double beta = -2.0;
    c[0] = 1.0 / beta;
    d[0] = rhs[0] / beta;
    for (int j = 1; j < ni; ++j) {
        beta = -2.0 - c[j - 1];
        c[j] = 1.0 / beta;
        d[j] = (rhs[j] - d[j - 1]) / beta;
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[ni] = d[ni - 1];
    for (int j = ni - 1; j >= 1; --j)
        v[j] = d[j - 1] - c[j - 1] * v[j + 1];
    v[0] = 0.0;
    v[n - 1] = 0.0;
    Eigen::VectorXd phi(n);
    phi[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for (int j = 1; j < n - 1; ++j)
        phi[j] = v[j] / (j * h);
    phi[n - 1] = 0.0;
    Eigen::VectorXd out(eval_r.size());
    for (int k = 0; k < eval_r.size(); ++k)
        out[k] = detail::cubic_uniform(phi, h, eval_r[k]);
    return out;
}

/// Second-order 5-point reference for the planar Poisson problem on
/// [0,L]^2 with zero boundary, sparse direct solve, bicubic sampling at the
/// tensor points eval_x (x) eval_y.
inline Eigen::MatrixXd fd_poisson_planar(
    const std::function<double(double, double)>& density, double L, int n_fine,
    const Eigen::VectorXd& eval_x, const Eigen::VectorXd& eval_y) {
    if (n_fine < 200)
        throw std::invalid_argument("fd_poisson_planar: n_fine must be >= 200");
    if (n_fine > 1024)
        throw std::invalid_argument("fd_poisson_planar: n_fine > 1024 refused");
    const int n = n_fine;
    const double h = L / (n - 1);
    const int ni = n - 2;
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    trips.reserve(5u * ni * ni);
    Eigen::VectorXd rhs(ni * ni);
    auto id = [ni](int i, int j) { return i * ni + j; };
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < ni; ++j) {
            const int k = id(i, j);
            trips.emplace_back(k, k, -4.0);
            if (i > 0) trips.emplace_back(k, id(i - 1, j), 1.0);
            if (i < ni - 1) trips.emplace_back(k, id(i + 1, j), 1.0);
            if (j > 0) trips.emplace_back(k, id(i, j - 1), 1.0);
            if (j < ni - 1) trips.emplace_back(k, id(i, j + 1), 1.0);
            rhs[k] = h * h * density((i + 1) * h, (j + 1) * h);
        }
    Eigen::SparseMatrix<double> A(ni * ni, ni * ni);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw numerical_failure("fd_poisson_planar: factorization failed");
    const Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < ni; ++j)
            phi(i + 1, j + 1) = sol[id(i, j)];
    // bicubic: cubic in y along four bracketing x-rows, then cubic across
    Eigen::MatrixXd out(eval_x.size(), eval_y.size());
    for (int a = 0; a < eval_x.size(); ++a) {
        int i = static_cast<int>(std::floor(eval_x[a] / h)) - 1;
        i = std::max(0, std::min(i, n - 4));
        for (int b = 0; b < eval_y.size(); ++b) {
            Eigen::VectorXd col(4);
            for (int k = 0; k < 4; ++k)
                col[k] = detail::cubic_uniform(phi.row(i + k).transpose(), h,
                                               eval_y[b]);
            double val = 0.0;
            for (int k = 0; k < 4; ++k) {
                double lk = 1.0;
                const double xk = (i + k) * h;
                for (int m = 0; m < 4; ++m) {
                    if (m == k) continue;
                    lk *= (eval_x[a] - (i + m) * h) / (xk - (i + m) * h);
                }
                val += lk * col[k];
            }
            out(a, b) = val;
        }
    }
    return out;
}

} // namespace snlab::oracle
