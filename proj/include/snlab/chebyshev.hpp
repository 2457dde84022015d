#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "snlab/errors.hpp"

namespace snlab::spectral {

/// Chebyshev-Gauss-Lobatto collocation grid on [0, L].
///
/// Nodes ascend: nodes[j] = (L/2)(1 - cos(j pi/(n-1))), so nodes[0] = 0 and
/// nodes[n-1] = L. quad_weights are Clenshaw-Curtis weights for the same
/// nodes, exact for polynomials of degree <= n-1.
struct ChebyshevGrid1D {
    int n_points = 0;
    double length = 0.0;
    Eigen::VectorXd nodes;
    Eigen::VectorXd quad_weights;
};

namespace detail {

// Barycentric weights for CGL nodes, up to an irrelevant common factor.
inline Eigen::VectorXd barycentric_weights(int n) {
    Eigen::VectorXd w(n);
    for (int j = 0; j < n; ++j)
        w[j] = (j % 2 == 0) ? 1.0 : -1.0;
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    return w;
}

// Clenshaw-Curtis weights on [-1,1] for n CGL points (Waldvogel/Trefethen
// form, computed by the cosine sums; O(n^2) which is fine at these sizes).
inline Eigen::VectorXd clenshaw_curtis_unit(int n) {
    const int N = n - 1;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd theta(n);
    for (int j = 0; j < n; ++j)
        theta[j] = std::numbers::pi * j / N;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(N - 1);
    if (N % 2 == 0) {
        w[0] = 1.0 / (double(N) * N - 1.0);
        w[N] = w[0];
        for (int k = 1; k <= N / 2 - 1; ++k)
            for (int i = 1; i < N; ++i)
                v[i - 1] -= 2.0 * std::cos(2.0 * k * theta[i]) / (4.0 * k * k - 1.0);
        for (int i = 1; i < N; ++i)
            v[i - 1] -= std::cos(double(N) * theta[i]) / (double(N) * N - 1.0);
    } else {
        w[0] = 1.0 / (double(N) * N);
        w[N] = w[0];
        for (int k = 1; k <= (N - 1) / 2; ++k)
            for (int i = 1; i < N; ++i)
                v[i - 1] -= 2.0 * std::cos(2.0 * k * theta[i]) / (4.0 * k * k - 1.0);
    }
    for (int i = 1; i < N; ++i)
        w[i] = 2.0 * v[i - 1] / N;
    return w;
}

} // namespace detail

inline ChebyshevGrid1D build_grid(int n, double L) {
    if (n < 8)
        throw std::invalid_argument("build_grid: n_points must be >= 8");
    if (!(L > 0.0))
        throw std::invalid_argument("build_grid: length must be > 0");
    ChebyshevGrid1D g;
    g.n_points = n;
    g.length = L;
    g.nodes.resize(n);
    const int N = n - 1;
    for (int j = 0; j < n; ++j)
        g.nodes[j] = 0.5 * L * (1.0 - std::cos(std::numbers::pi * j / N));
    g.nodes[0] = 0.0;
    g.nodes[N] = L;
    g.quad_weights = detail::clenshaw_curtis_unit(n) * (0.5 * L);
    return g;
}

/// Dense differentiation matrix of the given order (1 or 2) for samples at
/// the grid nodes. Both orders come straight from the barycentric weights;
/// the second derivative is not formed as D*D.
inline Eigen::MatrixXd diff_matrix(const ChebyshevGrid1D& grid, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("diff_matrix: order must be 1 or 2");
    const int n = grid.n_points;
    const Eigen::VectorXd w = detail::barycentric_weights(n);
    const Eigen::VectorXd& x = grid.nodes;
    Eigen::MatrixXd D1(n, n);
    for (int i = 0; i < n; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            D1(i, j) = (w[j] / w[i]) / (x[i] - x[j]);
            rowsum += D1(i, j);
        }
        D1(i, i) = -rowsum; // exact on constants
    }
    if (order == 1)
        return D1;
    Eigen::MatrixXd D2(n, n);
    for (int i = 0; i < n; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            D2(i, j) = 2.0 * D1(i, j) * (D1(i, i) - 1.0 / (x[i] - x[j]));
            rowsum += D2(i, j);
        }
        D2(i, i) = -rowsum;
    }
    return D2;
}

enum class Ends { left, right, both };

/// Remove rows/columns of boundary nodes so that a solve on the reduced
/// system (padded back with zeros) enforces homogeneous Dirichlet values.
inline Eigen::MatrixXd reduce_dirichlet(const Eigen::MatrixXd& m, Ends ends) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("reduce_dirichlet: matrix must be square");
    const int n = static_cast<int>(m.rows());
    switch (ends) {
    case Ends::both:
        if (n < 3)
            throw std::invalid_argument("reduce_dirichlet: matrix too small");
        return m.block(1, 1, n - 2, n - 2);
    case Ends::left:
        if (n < 2)
            throw std::invalid_argument("reduce_dirichlet: matrix too small");
        return m.block(1, 1, n - 1, n - 1);
    case Ends::right:
        if (n < 2)
            throw std::invalid_argument("reduce_dirichlet: matrix too small");
        return m.block(0, 0, n - 1, n - 1);
    }
    throw std::invalid_argument("reduce_dirichlet: bad ends");
}

/// Barycentric interpolation of nodal samples at an arbitrary point of [0, L].
template <typename Scalar>
Scalar interpolate(const ChebyshevGrid1D& grid,
                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& values,
                   double r) {
    const int n = grid.n_points;
    const Eigen::VectorXd w = detail::barycentric_weights(n);
    Scalar num = Scalar(0);
    double den = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = r - grid.nodes[j];
        if (d == 0.0)
            return values[j];
        const double c = w[j] / d;
        num += c * values[j];
        den += c;
    }
    return num / den;
}

enum class GridRole { axisymmetric_polar, planar_cartesian };

/// Tensor grid: grid_a is r (polar) or x (planar), grid_b is theta on
/// [0, pi] or y.
struct TensorGrid2D {
    ChebyshevGrid1D grid_a;
    ChebyshevGrid1D grid_b;
    GridRole role = GridRole::planar_cartesian;
};

inline TensorGrid2D build_polar_grid(int n_r, double L, int n_theta) {
    TensorGrid2D g;
    g.grid_a = build_grid(n_r, L);
    g.grid_b = build_grid(n_theta, std::numbers::pi);
    g.role = GridRole::axisymmetric_polar;
    return g;
}

inline TensorGrid2D build_planar_grid(int n_per_side, double L) {
    TensorGrid2D g;
    g.grid_a = build_grid(n_per_side, L);
    g.grid_b = build_grid(n_per_side, L);
    g.role = GridRole::planar_cartesian;
    return g;
}

} // namespace snlab::spectral
