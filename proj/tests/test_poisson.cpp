#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "snlab/oracle.hpp"
#include "snlab/poisson.hpp"

using namespace snlab;
using Catch::Approx;

TEST_CASE("radial poisson on zero density", "[poisson]") {
    const auto grid = spectral::build_grid(32, 10.0);
    fields::RadialWave u{grid, Eigen::VectorXcd::Zero(32)};
    const auto pot = poisson::radial_poisson(u);
    REQUIRE(pot.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("radial poisson manufactured solution", "[poisson]") {
    // |u|^2 = 2r gives v = r^2 - Lr and phi = r - L exactly
    const double L = 7.0;
    const auto grid = spectral::build_grid(24, L);
    fields::RadialWave u{grid, Eigen::VectorXcd(24)};
    for (int j = 0; j < 24; ++j)
        u.values[j] = std::sqrt(2.0 * grid.nodes[j]);
    const auto pot = poisson::radial_poisson(u);
    for (int j = 0; j < 24; ++j)
        REQUIRE(pot.values[j] == Approx(grid.nodes[j] - L).margin(1e-10));
}

namespace {
Eigen::VectorXd gaussian_bump_density(const spectral::ChebyshevGrid1D& grid,
                                      double sigma, double a) {
    Eigen::VectorXd d(grid.n_points);
    for (int j = 0; j < grid.n_points; ++j) {
        const double r = grid.nodes[j];
        const double g = std::exp(-(r - a) * (r - a) / (2 * sigma * sigma)) -
                         std::exp(-(r + a) * (r + a) / (2 * sigma * sigma));
        d[j] = g * g;
    }
    d[0] = 0.0;
    d[grid.n_points - 1] = 0.0;
    double p = grid.quad_weights.dot(d);
    d /= p;
    return d;
}
} // namespace

TEST_CASE("radial poisson matches finite-difference oracle", "[poisson]") {
    const double L = 100.0;
    const auto grid = spectral::build_grid(256, L);
    const Eigen::VectorXd dens = gaussian_bump_density(grid, 6.0, 50.0);
    poisson::RadialPoissonSolver solver(grid);
    const auto pot = solver.solve_density(dens);

    const double sigma = 6.0, a = 50.0;
    const double norm = [&] {
        // same normalization as the grid density
        Eigen::VectorXd d(grid.n_points);
        for (int j = 0; j < grid.n_points; ++j) {
            const double r = grid.nodes[j];
            const double g = std::exp(-(r - a) * (r - a) / (2 * sigma * sigma)) -
                             std::exp(-(r + a) * (r + a) / (2 * sigma * sigma));
            d[j] = g * g;
        }
        d[0] = d[grid.n_points - 1] = 0.0;
        return grid.quad_weights.dot(d);
    }();
    auto density_fn = [&](double r) {
        const double g = std::exp(-(r - a) * (r - a) / (2 * sigma * sigma)) -
                         std::exp(-(r + a) * (r + a) / (2 * sigma * sigma));
        return g * g / norm;
    };
    const Eigen::VectorXd ref =
        oracle::fd_poisson_radial(density_fn, L, 10000, grid.nodes);
    REQUIRE((pot.values - ref).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("radial poisson sign and linearity", "[poisson]") {
    const auto grid = spectral::build_grid(64, 20.0);
    const Eigen::VectorXd d1 = gaussian_bump_density(grid, 2.0, 6.0);
    const Eigen::VectorXd d2 = gaussian_bump_density(grid, 1.5, 12.0);
    poisson::RadialPoissonSolver solver(grid);
    const auto p1 = solver.solve_density(d1);
    const auto p2 = solver.solve_density(d2);
    for (int j = 0; j < 64; ++j)
        REQUIRE(p1.values[j] <= 1e-12);
    const auto p12 = solver.solve_density((2.0 * d1 + 0.5 * d2).eval());
    const Eigen::VectorXd combo = 2.0 * p1.values + 0.5 * p2.values;
    REQUIRE((p12.values - combo).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pr-adi zero density", "[poisson]") {
    const auto grid = spectral::build_polar_grid(24, 10.0, 12);
    poisson::PrAdiPoissonSolver solver(grid);
    poisson::PrAdiStats stats;
    const auto pot = solver.solve(Eigen::MatrixXd::Zero(24, 12), 1e-12, 50, &stats);
    REQUIRE(pot.values.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(stats.iterations == 1);
}

TEST_CASE("pr-adi axi agrees with the radial solver", "[poisson]") {
    const double L = 100.0;
    const int nr = 64, nt = 24;
    const auto grid1d = spectral::build_grid(nr, L);
    const auto grid2d = spectral::build_polar_grid(nr, L, nt);
    const Eigen::VectorXd dens1d = gaussian_bump_density(grid1d, 6.0, 50.0);
    Eigen::MatrixXd dens2d(nr, nt);
    for (int j = 0; j < nt; ++j)
        dens2d.col(j) = dens1d;
    poisson::PrAdiPoissonSolver solver(grid2d);
    poisson::PrAdiStats stats;
    const auto pot2d = solver.solve(dens2d, 1e-10, 2000, &stats);
    const auto pot1d = poisson::RadialPoissonSolver(grid1d).solve_density(dens1d);
    double err = 0.0;
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nt; ++j)
            err = std::max(err, std::abs(pot2d.values(i, j) - pot1d.values[i]));
    REQUIRE(err < 1e-5);
    // residual decreases after the initial transient
    REQUIRE(stats.residual_history.back() < stats.residual_history[1]);
    // nonpositive interior
    REQUIRE(pot2d.values.maxCoeff() <= 1e-12);
}

TEST_CASE("pr-adi planar manufactured solution", "[poisson]") {
    const double L = 1.0;
    const int n = 32;
    const auto grid = spectral::build_planar_grid(n, L);
    Eigen::MatrixXd src(n, n);
    Eigen::MatrixXd expect(n, n);
    const double k = std::numbers::pi / L;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double s = std::sin(k * grid.grid_a.nodes[i]) *
                             std::sin(k * grid.grid_b.nodes[j]);
            expect(i, j) = s;
            src(i, j) = -2.0 * k * k * s; // a linear-solver test only
        }
    poisson::PrAdiPoissonSolver solver(grid);
    const auto pot = solver.solve(src, 1e-10, 2000);
    REQUIRE((pot.values - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("pr-adi planar matches fd oracle and keeps sign", "[poisson]") {
    const double L = 12.0;
    const int n = 48;
    const auto grid = spectral::build_planar_grid(n, L);
    auto density_fn = [L](double x, double y) {
        const double dx = x - 0.5 * L, dy = y - 0.5 * L;
        return std::exp(-(dx * dx + dy * dy) / 6.0);
    };
    Eigen::MatrixXd dens(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            dens(i, j) = density_fn(grid.grid_a.nodes[i], grid.grid_b.nodes[j]);
    poisson::PrAdiPoissonSolver solver(grid);
    const auto pot = solver.solve(dens, 1e-10, 4000);
    REQUIRE(pot.values.maxCoeff() <= 1e-12);
    const Eigen::MatrixXd ref = oracle::fd_poisson_planar(
        density_fn, L, 1024, grid.grid_a.nodes, grid.grid_b.nodes);
    REQUIRE((pot.values - ref).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("pr-adi non-convergence carries the residual", "[poisson]") {
    const auto grid = spectral::build_polar_grid(24, 10.0, 12);
    Eigen::MatrixXd dens = Eigen::MatrixXd::Constant(24, 12, 0.1);
    dens.row(0).setZero();
    dens.row(23).setZero();
    poisson::PrAdiPoissonSolver solver(grid);
    try {
        solver.solve(dens, 1e-12, 2);
        FAIL("expected non_convergence");
    } catch (const non_convergence& e) {
        REQUIRE(e.last_residual() > 0.0);
        REQUIRE(e.history().size() == 2);
    }
}

TEST_CASE("fd oracle radial basics", "[poisson][oracle]") {
    const double L = 5.0;
    Eigen::VectorXd pts(3);
    pts << 1.0, 2.5, 4.0;
    const auto zero = oracle::fd_poisson_radial([](double) { return 0.0; }, L,
                                                2000, pts);
    REQUIRE(zero.cwiseAbs().maxCoeff() == 0.0);
    // density 2r => phi = r - L up to O(h^2)
    const auto lin = oracle::fd_poisson_radial([](double r) { return 2.0 * r; },
                                               L, 2000, pts);
    for (int k = 0; k < 3; ++k)
        REQUIRE(lin[k] == Approx(pts[k] - L).margin(1e-8));
    REQUIRE_THROWS_AS(oracle::fd_poisson_radial([](double) { return 0.0; }, L,
                                                100, pts),
                      std::invalid_argument);
}

TEST_CASE("fd oracle self convergence", "[poisson][oracle]") {
    const double L = 10.0;
    auto dens = [](double r) { return std::exp(-(r - 4.0) * (r - 4.0)); };
    Eigen::VectorXd pts(5);
    pts << 1.0, 3.0, 5.0, 7.0, 9.0;
    const auto coarse = oracle::fd_poisson_radial(dens, L, 1000, pts);
    const auto mid = oracle::fd_poisson_radial(dens, L, 2000, pts);
    const auto fine = oracle::fd_poisson_radial(dens, L, 8000, pts);
    const double e_coarse = (coarse - fine).cwiseAbs().maxCoeff();
    const double e_mid = (mid - fine).cwiseAbs().maxCoeff();
    REQUIRE(e_coarse / e_mid == Approx(4.0).margin(1.0));
}

TEST_CASE("fd oracle planar guards", "[poisson][oracle]") {
    Eigen::VectorXd pts(2);
    pts << 1.0, 2.0;
    REQUIRE_THROWS_AS(oracle::fd_poisson_planar(
                          [](double, double) { return 0.0; }, 4.0, 100, pts, pts),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(oracle::fd_poisson_planar(
                          [](double, double) { return 0.0; }, 4.0, 2048, pts, pts),
                      std::invalid_argument);
}
