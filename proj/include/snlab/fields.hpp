#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>

#include "snlab/chebyshev.hpp"

namespace snlab::fields {

using complexd = std::complex<double>;

/// u = r psi sampled on a radial grid; u vanishes at r = 0 and r = L.
struct RadialWave {
    spectral::ChebyshevGrid1D grid;
    Eigen::VectorXcd values;
};

/// u(r, theta) = r psi, stored as an (n_r x n_theta) matrix. u vanishes at
/// r = 0, L; u_theta vanishes at theta = 0, pi.
struct AxiWave {
    spectral::TensorGrid2D grid;
    Eigen::MatrixXcd values;
};

/// psi(x, y) on a square grid, zero on all four edges.
struct PlanarWave {
    spectral::TensorGrid2D grid;
    Eigen::MatrixXcd values;
};

/// phi on a radial grid; zero at r = L, finite at r = 0.
struct RadialPotential {
    spectral::ChebyshevGrid1D grid;
    Eigen::VectorXd values;
};

/// phi on a tensor grid (axisymmetric or planar).
struct Potential2D {
    spectral::TensorGrid2D grid;
    Eigen::MatrixXd values;
};

struct SpongeProfile {
    enum class Kind { radial, planar_radial };
    Kind kind = Kind::radial;
    // a e^{b(r-L)}: the default amplitude/rate pair keeps the reflected
    // probability of a slow outgoing pulse (wavenumber ~ 0.25) below 1e-3;
    // a sharper or weaker layer reflects measurably
    double amplitude = 4.0;
    double rate = 0.2;
    double cap = 1.0;     // planar: min(cap, e^{rate(rho - radius)})
    double radius = 20.0; // planar threshold radius
};

inline double sponge_value_radial(double r, const SpongeProfile& p, double L) {
    if (r < 0.0 || r > L)
        throw std::invalid_argument("sponge_value_radial: r outside [0, L]");
    return p.amplitude * std::exp(p.rate * (r - L));
}

/// Planar sponge in coordinates centred on the grid middle; circular so the
/// absorbing layer has no corners.
inline double sponge_value_planar(double x, double y, const SpongeProfile& p) {
    const double rho = std::hypot(x, y);
    return std::min(p.cap, std::exp(p.rate * (rho - p.radius)));
}

inline double sponge_value_planar(double x, double y) {
    return sponge_value_planar(x, y, SpongeProfile{SpongeProfile::Kind::planar_radial,
                                                   1.0, 0.5, 1.0, 20.0});
}

struct Perturbation {
    double epsilon = 1e-3;
    int mode = 1;
};

struct EvolutionConfig {
    double dt = 1e-2;
    double t_end = 1.0;
    double phi_tolerance = 1e-10;
    int phi_max_iterations = 50;
    std::optional<SpongeProfile> sponge;
    int output_every = 100;
    int checkpoint_every = 0; // 0 disables
    int snapshot_every = 0;   // 0 disables
    std::optional<Perturbation> perturbation;
    enum class PhiCoupling { iterated, lagged };
    PhiCoupling phi_coupling = PhiCoupling::iterated;
    // PR-ADI Poisson parameters (2D evolvers); rho <= 0 selects the
    // geometric-mean estimate.
    double rho = 0.0;
    double pr_tolerance = 1e-10;
    int pr_max_iterations = 2000;
};

inline void validate(const EvolutionConfig& c) {
    if (!(c.dt > 0.0))
        throw std::invalid_argument("EvolutionConfig: dt must be > 0");
    if (c.t_end < 0.0)
        throw std::invalid_argument("EvolutionConfig: t_end must be >= 0");
    if (c.t_end > 0.0 && !(c.dt < c.t_end || std::abs(c.dt - c.t_end) < 1e-12 * c.t_end))
        throw std::invalid_argument("EvolutionConfig: dt must not exceed t_end");
    if (!(c.phi_tolerance > 0.0))
        throw std::invalid_argument("EvolutionConfig: phi_tolerance must be > 0");
    if (c.phi_max_iterations < 1)
        throw std::invalid_argument("EvolutionConfig: phi_max_iterations must be >= 1");
    if (c.output_every < 1)
        throw std::invalid_argument("EvolutionConfig: output_every must be >= 1");
    if (c.checkpoint_every < 0 || c.snapshot_every < 0)
        throw std::invalid_argument("EvolutionConfig: cadence keys must be >= 0");
    if (!(c.pr_tolerance > 0.0))
        throw std::invalid_argument("EvolutionConfig: pr_tolerance must be > 0");
}

/// Probability remaining on the grid. The spherical measure is int_0^L
/// |u|^2 dr; the axisymmetric measure (1/2) int int |u|^2 sin(theta) dr
/// dtheta reduces to the same number for theta-independent fields, so a
/// normalized spherical state embedded on the 2D grid keeps probability 1.
inline double probability(const RadialWave& w) {
    return w.grid.quad_weights.dot(w.values.cwiseAbs2());
}

inline double probability(const AxiWave& w) {
    const auto& wr = w.grid.grid_a.quad_weights;
    const auto& wt = w.grid.grid_b.quad_weights;
    const auto& th = w.grid.grid_b.nodes;
    double total = 0.0;
    for (int j = 0; j < w.grid.grid_b.n_points; ++j) {
        const double wj = wt[j] * std::sin(th[j]);
        total += wj * wr.dot(w.values.col(j).cwiseAbs2());
    }
    return 0.5 * total;
}

inline double probability(const PlanarWave& w) {
    const auto& wx = w.grid.grid_a.quad_weights;
    const auto& wy = w.grid.grid_b.quad_weights;
    return wx.dot((w.values.cwiseAbs2() * wy).eval());
}

/// Partial probability int_0^{r_max} |u|^2 dr (quadrature weights clipped at
/// r_max by dropping outer nodes; adequate for sponge-reflection tracking).
inline double probability_within(const RadialWave& w, double r_max) {
    double total = 0.0;
    for (int j = 0; j < w.grid.n_points; ++j)
        if (w.grid.nodes[j] <= r_max)
            total += w.grid.quad_weights[j] * std::norm(w.values[j]);
    return total;
}

namespace detail {
template <typename Wave, typename F>
void scale_to_original(Wave& w, F&& multiply) {
    const double before = probability(w);
    multiply();
    const double after = probability(w);
    if (after > 0.0)
        w.values *= std::sqrt(before / after);
}
} // namespace detail

/// Multiply u by (1 + eps cos(mode pi r / L)) and renormalize to the
/// original probability. Smooth and keeps the boundary zeros.
inline void apply_perturbation(RadialWave& w, const Perturbation& p) {
    detail::scale_to_original(w, [&] {
        for (int j = 0; j < w.grid.n_points; ++j)
            w.values[j] *= 1.0 + p.epsilon *
                std::cos(p.mode * std::numbers::pi * w.grid.nodes[j] / w.grid.length);
    });
}

inline void apply_perturbation(AxiWave& w, const Perturbation& p) {
    detail::scale_to_original(w, [&] {
        for (int i = 0; i < w.grid.grid_a.n_points; ++i) {
            const double f = 1.0 + p.epsilon *
                std::cos(p.mode * std::numbers::pi * w.grid.grid_a.nodes[i] /
                         w.grid.grid_a.length);
            w.values.row(i) *= f;
        }
    });
}

inline void apply_perturbation(PlanarWave& w, const Perturbation& p) {
    const double L = w.grid.grid_a.length;
    const double half = 0.5 * L;
    // radius measured from the grid centre, capped at L so the factor stays
    // smooth across the whole square
    detail::scale_to_original(w, [&] {
        for (int i = 0; i < w.grid.grid_a.n_points; ++i)
            for (int j = 0; j < w.grid.grid_b.n_points; ++j) {
                const double r = std::hypot(w.grid.grid_a.nodes[i] - half,
                                            w.grid.grid_b.nodes[j] - half);
                w.values(i, j) *= 1.0 + p.epsilon *
                    std::cos(p.mode * std::numbers::pi * std::min(r, L) / L);
            }
    });
}

} // namespace snlab::fields
