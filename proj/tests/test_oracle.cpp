#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <vector>

#include "snlab/oracle.hpp"

using namespace snlab;
using Catch::Approx;
using complexd = std::complex<double>;

TEST_CASE("free gaussian vanishes at the origin", "[oracle]") {
    for (double t : {0.0, 0.3, 2.0})
        for (double v : {0.0, 0.5, -0.25})
            REQUIRE(std::abs(oracle::free_gaussian(0.0, t, 6.0, 50.0, v, 1.0)) <
                    1e-14);
}

TEST_CASE("free gaussian t=0 reduction", "[oracle]") {
    const double sigma = 6.0, a = 50.0, C = 0.7;
    for (double r : {10.0, 40.0, 50.0, 70.0}) {
        const complexd u = oracle::free_gaussian(r, 0.0, sigma, a, 0.0, C);
        const double expect =
            C / std::sqrt(sigma) *
            (std::exp(-(r - a) * (r - a) / (2 * sigma * sigma)) -
             std::exp(-(r + a) * (r + a) / (2 * sigma * sigma)));
        REQUIRE(u.real() == Approx(expect).margin(1e-14));
        REQUIRE(u.imag() == Approx(0.0).margin(1e-14));
    }
}

TEST_CASE("free gaussian decays far out", "[oracle]") {
    const double sigma = 6.0, a = 50.0;
    REQUIRE(std::abs(oracle::free_gaussian(a + 20.0 * sigma, 0.0, sigma, a, 0.0,
                                           1.0)) < 1e-12);
}

TEST_CASE("normalization constant", "[oracle]") {
    const auto grid = spectral::build_grid(256, 100.0);
    const double C = oracle::normalize_gaussian(6.0, 50.0, 0.0, grid);
    double p = 0.0;
    for (int j = 0; j < grid.n_points; ++j)
        p += grid.quad_weights[j] *
             std::norm(oracle::free_gaussian(grid.nodes[j], 0.0, 6.0, 50.0, 0.0, C));
    REQUIRE(p == Approx(1.0).margin(1e-10));

    // against a dense trapezoid integration
    const int N = 1000000;
    const double h = 100.0 / N;
    double acc = 0.0;
    for (int k = 1; k < N; ++k)
        acc += std::norm(oracle::free_gaussian(k * h, 0.0, 6.0, 50.0, 0.0, 1.0));
    acc *= h;
    const double C_dense = 1.0 / std::sqrt(acc);
    REQUIRE(C == Approx(C_dense).margin(1e-6));
}

TEST_CASE("free gaussian satisfies the free equation", "[oracle]") {
    // centered finite differences in r and t, step 1e-3
    const double sigma = 6.0, a = 50.0, v = 0.5, C = 1.0, h = 1e-3;
    for (double r : {30.0, 50.0, 70.0})
        for (double t : {0.5, 1.0}) {
            const complexd ut =
                (oracle::free_gaussian(r, t + h, sigma, a, v, C) -
                 oracle::free_gaussian(r, t - h, sigma, a, v, C)) /
                (2.0 * h);
            const complexd urr =
                (oracle::free_gaussian(r + h, t, sigma, a, v, C) -
                 2.0 * oracle::free_gaussian(r, t, sigma, a, v, C) +
                 oracle::free_gaussian(r - h, t, sigma, a, v, C)) /
                (h * h);
            const complexd residual = complexd(0.0, 1.0) * ut + urr;
            REQUIRE(std::abs(residual) < 1e-5);
        }
}

namespace {

// Brute-force reference: zero-potential radial evolution by fourth-order
// finite differences in space (odd extension through r = 0) and classical
// RK4 in time.
complexd integrate_free_radial(double r_query, double t_end, double sigma,
                               double a, double v, double C) {
    const double R = 160.0;
    const int n = 8001;
    const double h = R / (n - 1);
    const double dt = 2e-4;
    std::vector<complexd> u(n);
    for (int j = 0; j < n; ++j)
        u[j] = oracle::free_gaussian(j * h, 0.0, sigma, a, v, C);
    u[0] = 0.0;
    u[n - 1] = 0.0;
    auto rhs = [&](const std::vector<complexd>& w, std::vector<complexd>& out) {
        const complexd i1(0.0, 1.0);
        auto at = [&](int j) -> complexd {
            if (j >= 0 && j < n) return w[j];
            if (j < 0) return -w[-j]; // odd through the origin
            return 0.0;
        };
        for (int j = 1; j < n - 1; ++j) {
            const complexd d2 = (-at(j - 2) + 16.0 * at(j - 1) - 30.0 * at(j) +
                                 16.0 * at(j + 1) - at(j + 2)) /
                                (12.0 * h * h);
            out[j] = i1 * d2; // u_t = i u_rr
        }
        out[0] = 0.0;
        out[n - 1] = 0.0;
    };
    std::vector<complexd> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const int steps = static_cast<int>(std::lround(t_end / dt));
    for (int s = 0; s < steps; ++s) {
        rhs(u, k1);
        for (int j = 0; j < n; ++j) tmp[j] = u[j] + 0.5 * dt * k1[j];
        rhs(tmp, k2);
        for (int j = 0; j < n; ++j) tmp[j] = u[j] + 0.5 * dt * k2[j];
        rhs(tmp, k3);
        for (int j = 0; j < n; ++j) tmp[j] = u[j] + dt * k3[j];
        rhs(tmp, k4);
        for (int j = 0; j < n; ++j)
            u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    const int jq = static_cast<int>(std::lround(r_query / h));
    return u[jq];
}

} // namespace

TEST_CASE("free gaussian matches brute-force integration", "[oracle][slow]") {
    const double sigma = 6.0, a = 50.0, v = 0.5, C = 1.0;
    const complexd numeric = integrate_free_radial(50.0, 1.0, sigma, a, v, C);
    const complexd exact = oracle::free_gaussian(50.0, 1.0, sigma, a, v, C);
    REQUIRE(std::abs(numeric - exact) < 1e-6);
}

TEST_CASE("planar free gaussian factors solve the 2d free equation", "[oracle]") {
    const double sigma = 4.0, h = 1e-3;
    for (double x : {18.0, 22.0})
        for (double t : {0.4}) {
            auto f = [&](double xx, double tt) {
                return oracle::free_gaussian_planar(xx, 21.0, tt, sigma, 20.0,
                                                    20.0, 0.3);
            };
            const complexd ut = (f(x, t + h) - f(x, t - h)) / (2.0 * h);
            const complexd uxx =
                (f(x + h, t) - 2.0 * f(x, t) + f(x - h, t)) / (h * h);
            auto g = [&](double yy) {
                return oracle::free_gaussian_planar(x, yy, t, sigma, 20.0, 20.0,
                                                    0.3);
            };
            const complexd uyy = (g(21.0 + h) - 2.0 * g(21.0) + g(21.0 - h)) / (h * h);
            REQUIRE(std::abs(complexd(0, 1) * ut + uxx + uyy) < 1e-5);
        }
}

TEST_CASE("normalize gaussian rejects degenerate profiles", "[oracle]") {
    const auto grid = spectral::build_grid(32, 1.0);
    // bump centred far outside the grid with tiny width: all-zero samples
    REQUIRE_THROWS_AS(oracle::normalize_gaussian(1e-3, 1e6, 0.0, grid),
                      std::invalid_argument);
}
