#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "snlab/errors.hpp"
#include "snlab/fields.hpp"
#include "snlab/operators.hpp"

namespace snlab::poisson {

/// Spectral direct solve of (r phi)'' = |u|^2 / r with r phi vanishing at
/// both ends; phi(0) recovered as v'(0). Caches the factorization so the
/// evolvers can call it every inner iteration.
class RadialPoissonSolver {
public:
    explicit RadialPoissonSolver(const spectral::ChebyshevGrid1D& grid)
        : grid_(grid), D1_(spectral::diff_matrix(grid, 1)) {
        const Eigen::MatrixXd D2 = spectral::diff_matrix(grid, 2);
        const Eigen::MatrixXd D2red =
            spectral::reduce_dirichlet(D2, spectral::Ends::both);
        lu_.compute(D2red);
        // one-time probe; the reduced operator is invertible for any valid grid
        const int ni = grid.n_points - 2;
        const Eigen::VectorXd probe = Eigen::VectorXd::Ones(ni);
        const Eigen::VectorXd sol = lu_.solve(probe);
        if (!sol.allFinite() || (D2red * sol - probe).cwiseAbs().maxCoeff() > 1e-6)
            throw numerical_failure("radial_poisson: reduced D2 is singular");
    }

    const spectral::ChebyshevGrid1D& grid() const { return grid_; }

    /// density = |u|^2 sampled at the nodes.
    fields::RadialPotential solve_density(const Eigen::VectorXd& density) const {
        const int n = grid_.n_points;
        Eigen::VectorXd src(n - 2);
        for (int j = 1; j < n - 1; ++j)
            src[j - 1] = density[j] / grid_.nodes[j];
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        v.segment(1, n - 2) = lu_.solve(src);
        if (!v.allFinite())
            throw numerical_failure("radial_poisson: non-finite solve");
        fields::RadialPotential pot;
        pot.grid = grid_;
        pot.values.resize(n);
        pot.values[0] = D1_.row(0).dot(v); // v'(0): limit of v/r
        for (int j = 1; j < n - 1; ++j)
            pot.values[j] = v[j] / grid_.nodes[j];
        pot.values[n - 1] = 0.0;
        return pot;
    }

    fields::RadialPotential solve(const fields::RadialWave& u) const {
        return solve_density(u.values.cwiseAbs2());
    }

private:
    spectral::ChebyshevGrid1D grid_;
    Eigen::MatrixXd D1_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline fields::RadialPotential radial_poisson(const fields::RadialWave& u) {
    return RadialPoissonSolver(u.grid).solve(u);
}

struct PrAdiStats {
    int iterations = 0;
    std::vector<double> residual_history;
    std::vector<double> rho_cycle;
};

/// Peaceman-Rachford alternating-direction iteration for the Poisson half of
/// the system on a tensor grid. Axisymmetric geometry solves the equation
/// for v = r phi,
///     v_rr + (1/(r^2 sin th))(sin th v_th)_th = |u|^2 / r,
/// with v = 0 at r = 0, L and v_th = 0 at the poles; planar geometry solves
/// phi_xx + phi_yy = |psi|^2 with phi = 0 on the square edge.
///
/// Sweeps use the positive-semidefinite splitting A_i = -L_i,
///     (rho + A_1) x_{k+1/2} = (rho - A_2) x_k - f
///     (rho + A_2) x_{k+1}   = (rho - A_1) x_{k+1/2} - f
/// from x_0 = 0; this is the paper-form iteration with the sign of rho
/// fixed so that it contracts. A fixed rho > 0 always converges but slowly
/// when the spectrum of A_1 is wide, so by default the sweeps cycle through
/// a geometric (Wachspress) parameter ladder spanning the extreme
/// eigenvalue estimates of A_1; passing rho > 0 pins a single constant.
class PrAdiPoissonSolver {
public:
    explicit PrAdiPoissonSolver(const spectral::TensorGrid2D& grid, double rho = 0.0)
        : grid_(grid) {
        na_ = grid.grid_a.n_points;
        nb_ = grid.grid_b.n_points;
        const Eigen::MatrixXd D2a = spectral::diff_matrix(grid.grid_a, 2);
        A1_ = -spectral::reduce_dirichlet(D2a, spectral::Ends::both);
        axi_ = grid.role == spectral::GridRole::axisymmetric_polar;
        if (axi_)
            theta_ = spectral::make_theta_operator(grid.grid_b);
        else {
            const Eigen::MatrixXd D2b = spectral::diff_matrix(grid.grid_b, 2);
            A2_planar_ = -spectral::reduce_dirichlet(D2b, spectral::Ends::both);
        }
        if (rho > 0.0)
            rhos_ = {rho};
        else
            rhos_ = parameter_ladder();
        factor();
    }

    const std::vector<double>& rho_cycle() const { return rhos_; }
    const spectral::TensorGrid2D& grid() const { return grid_; }

    /// density sampled on the full grid (|u|^2 or |psi|^2).
    fields::Potential2D solve(const Eigen::MatrixXd& density, double tol,
                              int max_iter, PrAdiStats* stats = nullptr) const {
        if (density.rows() != na_ || density.cols() != nb_)
            throw std::invalid_argument("pr_adi_poisson: density shape mismatch");
        return axi_ ? solve_axi(density, tol, max_iter, stats)
                    : solve_planar(density, tol, max_iter, stats);
    }

private:
    // extreme eigenvalue magnitudes of A1 from 20 power-iteration steps each
    std::pair<double, double> extreme_eigs() const {
        const int ni = na_ - 2;
        Eigen::VectorXd x(ni);
        for (int i = 0; i < ni; ++i)
            x[i] = ((i % 2 == 0) ? 1.0 : -1.0) / (i + 1.0);
        x.normalize();
        double lam_max = 1.0;
        for (int k = 0; k < 20; ++k) {
            x = A1_ * x;
            lam_max = x.norm();
            x /= lam_max;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A1_);
        Eigen::VectorXd y(ni);
        for (int i = 0; i < ni; ++i)
            y[i] = 1.0 / (i + 1.0);
        y.normalize();
        double mu = 1.0;
        for (int k = 0; k < 20; ++k) {
            y = lu.solve(y);
            mu = y.norm();
            y /= mu;
        }
        return {1.0 / mu, lam_max};
    }

    std::vector<double> parameter_ladder() const {
        auto [lmin, lmax] = extreme_eigs();
        lmin = std::max(lmin, 1e-12);
        const double kappa = std::max(lmax / lmin, 10.0);
        const int J = std::clamp(int(std::ceil(std::log10(kappa))) + 4, 6, 14);
        std::vector<double> rhos(J);
        for (int j = 1; j <= J; ++j)
            rhos[j - 1] = lmin * std::pow(kappa, (2.0 * j - 1.0) / (2.0 * J));
        return rhos;
    }

    void factor() {
        const int ni = na_ - 2;
        lu_a_.resize(rhos_.size());
        for (std::size_t p = 0; p < rhos_.size(); ++p)
            lu_a_[p].compute(rhos_[p] * Eigen::MatrixXd::Identity(ni, ni) + A1_);
        if (axi_) {
            lu_b_axi_.resize(rhos_.size());
            for (std::size_t p = 0; p < rhos_.size(); ++p) {
                lu_b_axi_[p].resize(ni);
                for (int i = 0; i < ni; ++i) {
                    const double r = grid_.grid_a.nodes[i + 1];
                    Eigen::MatrixXd M =
                        rhos_[p] * Eigen::MatrixXd::Identity(nb_, nb_)
                        - (1.0 / (r * r)) * theta_.lambda_reg;
                    M.row(0) = theta_.D1.row(0);
                    M.row(nb_ - 1) = theta_.D1.row(nb_ - 1);
                    lu_b_axi_[p][i].compute(M);
                }
            }
        } else {
            lu_b_planar_.resize(rhos_.size());
            const int nj = nb_ - 2;
            for (std::size_t p = 0; p < rhos_.size(); ++p)
                lu_b_planar_[p].compute(
                    rhos_[p] * Eigen::MatrixXd::Identity(nj, nj) + A2_planar_);
        }
    }

    Eigen::MatrixXd apply_A2_axi(const Eigen::MatrixXd& V) const {
        Eigen::MatrixXd W = -(V * theta_.lambda_reg.transpose());
        for (int i = 0; i < na_ - 2; ++i) {
            const double r = grid_.grid_a.nodes[i + 1];
            W.row(i) /= r * r;
        }
        return W;
    }

    fields::Potential2D solve_axi(const Eigen::MatrixXd& density, double tol,
                                  int max_iter, PrAdiStats* stats) const {
        const int ni = na_ - 2;
        Eigen::MatrixXd f(ni, nb_);
        for (int i = 0; i < ni; ++i)
            f.row(i) = density.row(i + 1) / grid_.grid_a.nodes[i + 1];
        Eigen::MatrixXd V = Eigen::MatrixXd::Zero(ni, nb_);
        std::vector<double> res_hist;
        bool converged = false;
        double residual = 0.0;
        int it;
        for (it = 1; it <= max_iter; ++it) {
            const std::size_t p = (it - 1) % rhos_.size();
            const double rho = rhos_[p];
            const Eigen::MatrixXd Vold = V;
            Eigen::MatrixXd rhs = rho * V - apply_A2_axi(V) - f;
            const Eigen::MatrixXd Vh = lu_a_[p].solve(rhs);
            Eigen::MatrixXd rhs2 = rho * Vh - (A1_ * Vh) - f;
            rhs2.col(0).setZero();
            rhs2.col(nb_ - 1).setZero();
            for (int i = 0; i < ni; ++i)
                V.row(i) = lu_b_axi_[p][i].solve(rhs2.row(i).transpose()).transpose();
            const double update = (V - Vold).cwiseAbs().maxCoeff();
            const Eigen::MatrixXd res = -(A1_ * V) - apply_A2_axi(V) - f;
            residual = res.block(0, 1, ni, nb_ - 2).cwiseAbs().maxCoeff();
            res_hist.push_back(residual);
            if (update < tol && residual < 10.0 * tol) {
                converged = true;
                break;
            }
        }
        if (stats) {
            stats->iterations = std::min(it, max_iter);
            stats->residual_history = res_hist;
            stats->rho_cycle = rhos_;
        }
        if (!converged)
            throw non_convergence("pr_adi_poisson (axi) did not converge",
                                  residual, res_hist);
        return extract_phi_axi(V);
    }

    fields::Potential2D extract_phi_axi(const Eigen::MatrixXd& V) const {
        const int ni = na_ - 2;
        Eigen::MatrixXd Vfull = Eigen::MatrixXd::Zero(na_, nb_);
        Vfull.block(1, 0, ni, nb_) = V;
        fields::Potential2D pot;
        pot.grid = grid_;
        pot.values.resize(na_, nb_);
        const Eigen::MatrixXd D1a = spectral::diff_matrix(grid_.grid_a, 1);
        pot.values.row(0) = D1a.row(0) * Vfull; // phi(0,.) = v_r(0,.)
        for (int i = 1; i < na_ - 1; ++i)
            pot.values.row(i) = Vfull.row(i) / grid_.grid_a.nodes[i];
        pot.values.row(na_ - 1).setZero();
        return pot;
    }

    fields::Potential2D solve_planar(const Eigen::MatrixXd& density, double tol,
                                     int max_iter, PrAdiStats* stats) const {
        const int ni = na_ - 2, nj = nb_ - 2;
        const Eigen::MatrixXd f = density.block(1, 1, ni, nj);
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(ni, nj);
        std::vector<double> res_hist;
        bool converged = false;
        double residual = 0.0;
        int it;
        for (it = 1; it <= max_iter; ++it) {
            const std::size_t p = (it - 1) % rhos_.size();
            const double rho = rhos_[p];
            const Eigen::MatrixXd Pold = P;
            const Eigen::MatrixXd rhs =
                rho * P - (P * A2_planar_.transpose()) - f;
            const Eigen::MatrixXd Ph = lu_a_[p].solve(rhs);
            const Eigen::MatrixXd rhs2 = rho * Ph - (A1_ * Ph) - f;
            P = lu_b_planar_[p].solve(rhs2.transpose()).transpose();
            const double update = (P - Pold).cwiseAbs().maxCoeff();
            residual = (-(A1_ * P) - (P * A2_planar_.transpose()) - f)
                           .cwiseAbs().maxCoeff();
            res_hist.push_back(residual);
            if (update < tol && residual < 10.0 * tol) {
                converged = true;
                break;
            }
        }
        if (stats) {
            stats->iterations = std::min(it, max_iter);
            stats->residual_history = res_hist;
            stats->rho_cycle = rhos_;
        }
        if (!converged)
            throw non_convergence("pr_adi_poisson (planar) did not converge",
                                  residual, res_hist);
        fields::Potential2D pot;
        pot.grid = grid_;
        pot.values = Eigen::MatrixXd::Zero(na_, nb_);
        pot.values.block(1, 1, ni, nj) = P;
        return pot;
    }

    spectral::TensorGrid2D grid_;
    int na_ = 0, nb_ = 0;
    bool axi_ = false;
    Eigen::MatrixXd A1_;
    Eigen::MatrixXd A2_planar_;
    spectral::ThetaOperator theta_;
    std::vector<double> rhos_;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_a_;
    std::vector<std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>>> lu_b_axi_;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_b_planar_;
};

inline fields::Potential2D pr_adi_poisson(const spectral::TensorGrid2D& grid,
                                          const Eigen::MatrixXd& density,
                                          double rho, double tol, int max_iter,
                                          PrAdiStats* stats = nullptr) {
    return PrAdiPoissonSolver(grid, rho).solve(density, tol, max_iter, stats);
}

} // namespace snlab::poisson
