#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "snlab/errors.hpp"
#include "snlab/fields.hpp"
#include "snlab/operators.hpp"

namespace snlab::diagnostics {

using complexd = std::complex<double>;

/// One output-time row of an evolution run.
struct DiagnosticsRecord {
    double t = 0.0;
    double p_grid = 0.0;
    double E_conserved = 0.0;
    double E_functional = 0.0;
    double J2 = 0.0;
    double probe_phase = 0.0;
    int phi_iterations = 0;
};

namespace detail {

using spectral::apply_real;
using spectral::apply_real_cols;

// int (|grad psi|^2 + c phi |psi|^2) in the radial measure; the cross term
// of |grad(u/r)|^2 integrates away against the boundary zeros, leaving
// int |u'|^2 dr.
inline double radial_energy(const fields::RadialWave& w,
                            const fields::RadialPotential& pot, double c) {
    const Eigen::MatrixXd D1 = spectral::diff_matrix(w.grid, 1);
    const Eigen::VectorXcd up = apply_real(D1, w.values);
    double e = 0.0;
    for (int j = 0; j < w.grid.n_points; ++j)
        e += w.grid.quad_weights[j] *
             (std::norm(up[j]) + c * pot.values[j] * std::norm(w.values[j]));
    return e;
}

inline double axi_energy(const fields::AxiWave& w, const fields::Potential2D& pot,
                         double c) {
    const auto& gr = w.grid.grid_a;
    const auto& gt = w.grid.grid_b;
    const Eigen::MatrixXd D1r = spectral::diff_matrix(gr, 1);
    const Eigen::MatrixXd D1t = spectral::diff_matrix(gt, 1);
    const Eigen::MatrixXcd ur = apply_real(D1r, w.values);
    const Eigen::MatrixXcd ut = apply_real_cols(w.values, D1t);
    double e = 0.0;
    for (int i = 0; i < gr.n_points; ++i) {
        const double r = gr.nodes[i];
        for (int j = 0; j < gt.n_points; ++j) {
            const double m = gr.quad_weights[i] * gt.quad_weights[j] *
                             std::sin(gt.nodes[j]);
            double grad2 = std::norm(ur(i, j));
            if (i > 0)
                grad2 += std::norm(ut(i, j)) / (r * r); // u(0,.) = 0 exactly
            e += m * (grad2 + c * pot.values(i, j) * std::norm(w.values(i, j)));
        }
    }
    return 0.5 * e;
}

inline double planar_energy(const fields::PlanarWave& w,
                            const fields::Potential2D& pot, double c) {
    const auto& gx = w.grid.grid_a;
    const auto& gy = w.grid.grid_b;
    const Eigen::MatrixXd D1x = spectral::diff_matrix(gx, 1);
    const Eigen::MatrixXd D1y = spectral::diff_matrix(gy, 1);
    const Eigen::MatrixXcd px = apply_real(D1x, w.values);
    const Eigen::MatrixXcd py = apply_real_cols(w.values, D1y);
    double e = 0.0;
    for (int i = 0; i < gx.n_points; ++i)
        for (int j = 0; j < gy.n_points; ++j) {
            const double m = gx.quad_weights[i] * gy.quad_weights[j];
            e += m * (std::norm(px(i, j)) + std::norm(py(i, j)) +
                      c * pot.values(i, j) * std::norm(w.values(i, j)));
        }
    return e;
}

} // namespace detail

/// Conserved energy of the flow: int (|grad psi|^2 + (1/2) phi |psi|^2);
/// the half prevents double counting of the pair interaction.
inline double conserved_energy(const fields::RadialWave& w,
                               const fields::RadialPotential& pot) {
    return detail::radial_energy(w, pot, 0.5);
}
inline double conserved_energy(const fields::AxiWave& w,
                               const fields::Potential2D& pot) {
    return detail::axi_energy(w, pot, 0.5);
}
inline double conserved_energy(const fields::PlanarWave& w,
                               const fields::Potential2D& pot) {
    return detail::planar_energy(w, pot, 0.5);
}

/// E = int (|grad psi|^2 + phi |psi|^2); equals the eigenvalue on a
/// converged stationary state, and is not the conserved energy.
inline double energy_functional(const fields::RadialWave& w,
                                const fields::RadialPotential& pot) {
    return detail::radial_energy(w, pot, 1.0);
}
inline double energy_functional(const fields::AxiWave& w,
                                const fields::Potential2D& pot) {
    return detail::axi_energy(w, pot, 1.0);
}
inline double energy_functional(const fields::PlanarWave& w,
                                const fields::Potential2D& pot) {
    return detail::planar_energy(w, pot, 1.0);
}

/// J^2 = int int |du/dtheta|^2 sin(theta) dr dtheta (the r^2 sin(theta)
/// measure form of int |psi_theta|^2).
inline double angular_momentum_J2(const fields::AxiWave& w) {
    const auto& gr = w.grid.grid_a;
    const auto& gt = w.grid.grid_b;
    const Eigen::MatrixXd D1t = spectral::diff_matrix(gt, 1);
    const Eigen::MatrixXcd ut = detail::apply_real_cols(w.values, D1t);
    double j2 = 0.0;
    for (int i = 0; i < gr.n_points; ++i)
        for (int j = 0; j < gt.n_points; ++j)
            j2 += gr.quad_weights[i] * gt.quad_weights[j] *
                  std::sin(gt.nodes[j]) * std::norm(ut(i, j));
    return j2;
}

/// Planar analogue about the grid centre: int |x psi_y - y psi_x|^2 dx dy.
inline double angular_momentum_J2(const fields::PlanarWave& w) {
    const auto& gx = w.grid.grid_a;
    const auto& gy = w.grid.grid_b;
    const double cx = 0.5 * gx.length, cy = 0.5 * gy.length;
    const Eigen::MatrixXd D1x = spectral::diff_matrix(gx, 1);
    const Eigen::MatrixXd D1y = spectral::diff_matrix(gy, 1);
    const Eigen::MatrixXcd px = detail::apply_real(D1x, w.values);
    const Eigen::MatrixXcd py = detail::apply_real_cols(w.values, D1y);
    double j2 = 0.0;
    for (int i = 0; i < gx.n_points; ++i)
        for (int j = 0; j < gy.n_points; ++j) {
            const complexd ltheta = (gx.nodes[i] - cx) * py(i, j) -
                                    (gy.nodes[j] - cy) * px(i, j);
            j2 += gx.quad_weights[i] * gy.quad_weights[j] * std::norm(ltheta);
        }
    return j2;
}

/// Lower bound (|E_initial|/|E_ground|)^{1/3} on the probability left in the
/// rescaled ground state; requires a negative initial energy.
inline double residual_bound(double E_initial, double E_ground) {
    if (E_initial >= 0.0)
        throw bound_inapplicable("residual_bound: initial energy must be negative");
    if (E_ground >= 0.0)
        throw bound_inapplicable("residual_bound: ground energy must be negative");
    return std::cbrt(std::abs(E_initial) / std::abs(E_ground));
}

struct SpectrumPeak {
    double frequency = 0.0; // angular, in (-pi/dt, pi/dt]
    double amplitude = 0.0;
};

/// Discrete Fourier magnitude peaks of a uniformly sampled complex series:
/// local maxima above 5x the median magnitude, strongest first.
inline std::vector<SpectrumPeak>
power_spectrum(const std::vector<complexd>& series, double dt) {
    const int N = static_cast<int>(series.size());
    if (N < 64)
        throw std::invalid_argument("power_spectrum: series length must be >= 64");
    std::vector<double> mag(N);
    for (int k = 0; k < N; ++k) {
        complexd acc = 0.0;
        for (int n = 0; n < N; ++n) {
            const double ang = -2.0 * std::numbers::pi * double(k) * n / N;
            acc += series[n] * complexd(std::cos(ang), std::sin(ang));
        }
        mag[k] = std::abs(acc);
    }
    std::vector<double> sorted = mag;
    std::nth_element(sorted.begin(), sorted.begin() + N / 2, sorted.end());
    const double median = sorted[N / 2];
    std::vector<SpectrumPeak> peaks;
    for (int k = 0; k < N; ++k) {
        const double prev = mag[(k + N - 1) % N];
        const double next = mag[(k + 1) % N];
        if (mag[k] > prev && mag[k] >= next && mag[k] > 5.0 * median) {
            double omega = 2.0 * std::numbers::pi * k / (N * dt);
            if (k > N / 2)
                omega -= 2.0 * std::numbers::pi / dt;
            peaks.push_back({omega, mag[k]});
        }
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const SpectrumPeak& a, const SpectrumPeak& b) {
                  return a.amplitude > b.amplitude;
              });
    return peaks;
}

/// Estimated error order k from observables at steps (h, h/2, h/4):
/// q = (O_h - O_h4)/(O_h2 - O_h4) = 2^k + 1.
inline double richardson_order(double O_h, double O_h2, double O_h4) {
    const double den = O_h2 - O_h4;
    if (std::abs(den) < 1e-15)
        throw solver_error("richardson_order: indeterminate, observables converged");
    const double q = (O_h - O_h4) / den;
    if (!(q > 1.0))
        throw solver_error("richardson_order: quotient not above 1, no clean order");
    return std::log2(q - 1.0);
}

struct RescaleFit {
    double p = 0.0;
    double residual = 0.0;
};

/// Compare |wave_final| against the rescaled ground-state profile
/// p * u0(p r) with p set by the probability left on the grid; returns the
/// relative L2 residual of the magnitudes.
inline RescaleFit fit_rescaled_ground(const fields::RadialWave& wave_final,
                                      const fields::RadialWave& ground) {
    const double p = fields::probability(wave_final);
    if (p < 0.01)
        throw fit_meaningless("fit_rescaled_ground: probability below 0.01");
    const Eigen::VectorXd g0 = ground.values.cwiseAbs();
    const auto& grid = wave_final.grid;
    double num = 0.0, den = 0.0;
    for (int j = 0; j < grid.n_points; ++j) {
        const double arg = std::min(p * grid.nodes[j], ground.grid.length);
        const double up = p * spectral::interpolate<double>(ground.grid, g0, arg);
        const double d = std::abs(wave_final.values[j]) - up;
        num += grid.quad_weights[j] * d * d;
        den += grid.quad_weights[j] * up * up;
    }
    return {p, std::sqrt(num / den)};
}

/// Accumulate the unwrapped probe phase; valid while the per-output phase
/// advance stays below pi.
inline double unwrap_phase(double accumulated, complexd prev, complexd now) {
    if (prev == complexd(0.0, 0.0) || now == complexd(0.0, 0.0))
        return accumulated;
    return accumulated + std::arg(now / prev);
}

} // namespace snlab::diagnostics
