#pragma once

#include <Eigen/Dense>
#include <map>
#include <variant>

#include "snlab/evolve_spherical.hpp"
#include "snlab/poisson.hpp"

namespace snlab::evolve {

/// Alternating-direction implicit evolution on a tensor grid,
///     (1 - (ih/2) L1) S = (1 + (ih/2) L2) u
///     (1 - (ih/2) L2) T = (1 + (ih/2) L1) S
///     (1 + (ih/2) phi^{n+1}) u^{n+1} = (1 - (ih/2) phi^n) T,
/// axisymmetric (L1 = d_rr, L2 the polar-angle operator on u) or planar
/// (L1 = d_xx, L2 = d_yy). phi^{n+1} comes from a fixed-point loop through
/// the PR-ADI Poisson solve (or is lagged to phi^n when configured); the
/// sponge enters the third sub-step as a negative imaginary potential
/// phi -> phi - i s.
class AdiEvolver {
public:
    enum class Geometry { axisymmetric, planar };

    AdiEvolver(fields::AxiWave initial, fields::EvolutionConfig cfg,
               bool potential_off = false)
        : geometry_(Geometry::axisymmetric), grid_(initial.grid),
          cfg_(std::move(cfg)), potential_off_(potential_off),
          psolver_(initial.grid, cfg_.rho) {
        fields::validate(cfg_);
        if (grid_.role != spectral::GridRole::axisymmetric_polar)
            throw std::invalid_argument("AdiEvolver: polar grid expected");
        U_ = std::move(initial.values);
        init_common();
    }

    AdiEvolver(fields::PlanarWave initial, fields::EvolutionConfig cfg,
               bool potential_off = false)
        : geometry_(Geometry::planar), grid_(initial.grid),
          cfg_(std::move(cfg)), potential_off_(potential_off),
          psolver_(initial.grid, cfg_.rho) {
        fields::validate(cfg_);
        if (grid_.role != spectral::GridRole::planar_cartesian)
            throw std::invalid_argument("AdiEvolver: planar grid expected");
        U_ = std::move(initial.values);
        init_common();
    }

    Geometry geometry() const { return geometry_; }
    const spectral::TensorGrid2D& grid() const { return grid_; }
    const Eigen::MatrixXcd& values() const { return U_; }
    const fields::Potential2D& potential() const { return potential_; }
    const fields::EvolutionConfig& config() const { return cfg_; }
    double time() const { return t_; }
    int step() const { return step_; }
    bool potential_off() const { return potential_off_; }

    fields::AxiWave axi_wave() const { return {grid_, U_}; }
    fields::PlanarWave planar_wave() const { return {grid_, U_}; }

    double probability() const {
        return geometry_ == Geometry::axisymmetric
                   ? fields::probability(axi_wave())
                   : fields::probability(planar_wave());
    }

    int adi_step() {
        const int iters = try_step(cfg_.dt, 0);
        ++step_;
        return iters;
    }

    int advance_step() { return adi_step(); }

    diagnostics::DiagnosticsRecord record(int phi_iterations) {
        const fields::complexd now = U_(probe_i_, probe_j_);
        probe_phase_ = diagnostics::unwrap_phase(probe_phase_, probe_prev_, now);
        probe_prev_ = now;
        diagnostics::DiagnosticsRecord r;
        r.t = t_;
        r.phi_iterations = phi_iterations;
        r.probe_phase = probe_phase_;
        if (geometry_ == Geometry::axisymmetric) {
            const auto w = axi_wave();
            r.p_grid = fields::probability(w);
            r.E_conserved = diagnostics::conserved_energy(w, potential_);
            r.E_functional = diagnostics::energy_functional(w, potential_);
            r.J2 = diagnostics::angular_momentum_J2(w);
        } else {
            const auto w = planar_wave();
            r.p_grid = fields::probability(w);
            r.E_conserved = diagnostics::conserved_energy(w, potential_);
            r.E_functional = diagnostics::energy_functional(w, potential_);
            r.J2 = diagnostics::angular_momentum_J2(w);
        }
        return r;
    }

    int probe_i() const { return probe_i_; }
    int probe_j() const { return probe_j_; }
    double probe_phase() const { return probe_phase_; }

    void restore(double t, int step, int pi, int pj, double phase,
                 fields::complexd prev) {
        t_ = t;
        step_ = step;
        probe_i_ = pi;
        probe_j_ = pj;
        probe_phase_ = phase;
        probe_prev_ = prev;
    }
    void set_state(const Eigen::MatrixXcd& U, const fields::Potential2D& pot) {
        U_ = U;
        potential_ = pot;
    }

private:
    void init_common() {
        const int na = grid_.grid_a.n_points;
        const int nb = grid_.grid_b.n_points;
        U_.row(0).setZero();
        U_.row(na - 1).setZero();
        if (geometry_ == Geometry::planar) {
            U_.col(0).setZero();
            U_.col(nb - 1).setZero();
        }
        if (cfg_.perturbation) {
            if (geometry_ == Geometry::axisymmetric) {
                auto w = axi_wave();
                fields::apply_perturbation(w, *cfg_.perturbation);
                U_ = w.values;
            } else {
                auto w = planar_wave();
                fields::apply_perturbation(w, *cfg_.perturbation);
                U_ = w.values;
            }
        }
        D2a_red_ = spectral::reduce_dirichlet(
            spectral::diff_matrix(grid_.grid_a, 2), spectral::Ends::both);
        if (geometry_ == Geometry::axisymmetric)
            theta_ = spectral::make_theta_operator(grid_.grid_b);
        else
            D2b_red_ = spectral::reduce_dirichlet(
                spectral::diff_matrix(grid_.grid_b, 2), spectral::Ends::both);
        sponge_ = Eigen::MatrixXd::Zero(na, nb);
        if (cfg_.sponge) {
            if (geometry_ == Geometry::axisymmetric) {
                for (int i = 0; i < na; ++i) {
                    const double s = fields::sponge_value_radial(
                        grid_.grid_a.nodes[i], *cfg_.sponge, grid_.grid_a.length);
                    sponge_.row(i).setConstant(s);
                }
            } else {
                const double cx = 0.5 * grid_.grid_a.length;
                const double cy = 0.5 * grid_.grid_b.length;
                for (int i = 0; i < na; ++i)
                    for (int j = 0; j < nb; ++j)
                        sponge_(i, j) = fields::sponge_value_planar(
                            grid_.grid_a.nodes[i] - cx,
                            grid_.grid_b.nodes[j] - cy, *cfg_.sponge);
            }
        }
        potential_.grid = grid_;
        potential_.values = Eigen::MatrixXd::Zero(na, nb);
        if (!potential_off_)
            potential_ = solve_potential(U_.cwiseAbs2());
        // probe at the initial maximum
        double best = -1.0;
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < nb; ++j)
                if (std::abs(U_(i, j)) > best) {
                    best = std::abs(U_(i, j));
                    probe_i_ = i;
                    probe_j_ = j;
                }
        probe_prev_ = U_(probe_i_, probe_j_);
    }

    fields::Potential2D solve_potential(const Eigen::MatrixXd& density) const {
        return psolver_.solve(density, cfg_.pr_tolerance, cfg_.pr_max_iterations);
    }

    struct StepOps {
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu_a;             // 1 - ih/2 L1
        std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_b; // 1 - ih/2 L2
    };

    const StepOps& ops_for(double h) {
        auto it = ops_.find(h);
        if (it != ops_.end())
            return it->second;
        const fields::complexd ih2(0.0, 0.5 * h);
        const int na = grid_.grid_a.n_points;
        const int nb = grid_.grid_b.n_points;
        StepOps ops;
        Eigen::MatrixXcd A =
            Eigen::MatrixXcd::Identity(na - 2, na - 2) -
            ih2 * D2a_red_.cast<fields::complexd>();
        ops.lu_a.compute(A);
        if (geometry_ == Geometry::axisymmetric) {
            ops.lu_b.resize(na - 2);
            for (int i = 0; i < na - 2; ++i) {
                const double r = grid_.grid_a.nodes[i + 1];
                Eigen::MatrixXcd M =
                    Eigen::MatrixXcd::Identity(nb, nb) -
                    (ih2 / (r * r)) * theta_.lambda_reg.cast<fields::complexd>();
                M.row(0) = theta_.D1.row(0).cast<fields::complexd>();
                M.row(nb - 1) = theta_.D1.row(nb - 1).cast<fields::complexd>();
                ops.lu_b[i].compute(M);
            }
        } else {
            ops.lu_b.resize(1);
            Eigen::MatrixXcd B =
                Eigen::MatrixXcd::Identity(nb - 2, nb - 2) -
                ih2 * D2b_red_.cast<fields::complexd>();
            ops.lu_b[0].compute(B);
        }
        return ops_.emplace(h, std::move(ops)).first->second;
    }

    // L2 applied on the full grid (rows at r boundaries are zero fields)
    Eigen::MatrixXcd apply_L2(const Eigen::MatrixXcd& U) const {
        const int na = grid_.grid_a.n_points;
        if (geometry_ == Geometry::axisymmetric) {
            Eigen::MatrixXcd W =
                spectral::apply_real_cols(U, theta_.lambda_reg);
            W.row(0).setZero();
            W.row(na - 1).setZero();
            for (int i = 1; i < na - 1; ++i)
                W.row(i) /= grid_.grid_a.nodes[i] * grid_.grid_a.nodes[i];
            return W;
        }
        return spectral::apply_real_cols(U, spectral::diff_matrix(
                                                            grid_.grid_b, 2));
    }

    Eigen::MatrixXcd apply_L1(const Eigen::MatrixXcd& U) const {
        return spectral::apply_real(
            spectral::diff_matrix(grid_.grid_a, 2), U);
    }

    int try_step(double h, int depth) {
        try {
            return attempt(h);
        } catch (const non_convergence&) {
            if (depth >= 4)
                throw step_failure("adi_step: failed after 4 dt halvings");
            int iters = try_step(0.5 * h, depth + 1);
            iters += try_step(0.5 * h, depth + 1);
            return iters;
        }
    }

    int attempt(double h) {
        const fields::complexd ih2(0.0, 0.5 * h);
        const int na = grid_.grid_a.n_points;
        const int nb = grid_.grid_b.n_points;
        const auto& ops = ops_for(h);

        // (1 - ih/2 L1) S = (1 + ih/2 L2) u, line solves along a
        Eigen::MatrixXcd rhs1 = U_ + ih2 * apply_L2(U_);
        Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(na, nb);
        S.block(1, 0, na - 2, nb) = ops.lu_a.solve(rhs1.block(1, 0, na - 2, nb));

        // (1 - ih/2 L2) T = (1 + ih/2 L1) S, line solves along b
        Eigen::MatrixXcd rhs2 = S + ih2 * apply_L1(S);
        Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(na, nb);
        if (geometry_ == Geometry::axisymmetric) {
            for (int i = 1; i < na - 1; ++i) {
                Eigen::VectorXcd b = rhs2.row(i).transpose();
                b[0] = 0.0;       // Neumann rows at the poles
                b[nb - 1] = 0.0;
                T.row(i) = ops.lu_b[i - 1].solve(b).transpose();
            }
        } else {
            T.block(1, 1, na - 2, nb - 2) =
                ops.lu_b[0]
                    .solve(rhs2.block(1, 1, na - 2, nb - 2).transpose())
                    .transpose();
        }

        // (1 + ih/2 (phi - i s)) u = (1 - ih/2 (phi - i s_n)) T with the
        // fixed-point loop for phi^{n+1}
        auto third = [&](const Eigen::MatrixXd& phi_new) {
            Eigen::MatrixXcd out(na, nb);
            for (int i = 0; i < na; ++i)
                for (int j = 0; j < nb; ++j) {
                    const fields::complexd old_f(potential_.values(i, j),
                                                 -sponge_(i, j));
                    const fields::complexd new_f(phi_new(i, j), -sponge_(i, j));
                    out(i, j) = (1.0 - ih2 * old_f) * T(i, j) /
                                (1.0 + ih2 * new_f);
                }
            return out;
        };

        Eigen::MatrixXcd Unew;
        Eigen::MatrixXd phik = potential_.values;
        int iters = 0;
        if (potential_off_) {
            Unew = third(phik);
            iters = 1;
        } else if (cfg_.phi_coupling == fields::EvolutionConfig::PhiCoupling::lagged) {
            Unew = third(phik);
            phik = solve_potential(Unew.cwiseAbs2()).values;
            iters = 1;
        } else {
            bool converged = false;
            for (int k = 0; k < cfg_.phi_max_iterations; ++k) {
                Unew = third(phik);
                ++iters;
                const Eigen::MatrixXd phi_next =
                    solve_potential(Unew.cwiseAbs2()).values;
                const double d = (phi_next - phik).cwiseAbs().maxCoeff();
                phik = phi_next;
                if (d < cfg_.phi_tolerance) {
                    converged = true;
                    break;
                }
            }
            if (!converged)
                throw non_convergence("adi_step: phi loop did not converge", 0.0);
        }
        U_ = Unew;
        U_.row(0).setZero();
        U_.row(na - 1).setZero();
        if (geometry_ == Geometry::planar) {
            U_.col(0).setZero();
            U_.col(nb - 1).setZero();
        }
        potential_.values = phik;
        t_ += h;
        return iters;
    }

    Geometry geometry_;
    spectral::TensorGrid2D grid_;
    fields::EvolutionConfig cfg_;
    bool potential_off_ = false;
    poisson::PrAdiPoissonSolver psolver_;
    Eigen::MatrixXcd U_;
    fields::Potential2D potential_;
    Eigen::MatrixXd D2a_red_;
    Eigen::MatrixXd D2b_red_;
    spectral::ThetaOperator theta_;
    Eigen::MatrixXd sponge_;
    std::map<double, StepOps> ops_;
    double t_ = 0.0;
    int step_ = 0;
    int probe_i_ = 0, probe_j_ = 0;
    double probe_phase_ = 0.0;
    fields::complexd probe_prev_{0.0, 0.0};
};

inline void write_checkpoint(const AdiEvolver& ev,
                             const std::filesystem::path& path) {
    auto snap = ev.geometry() == AdiEvolver::Geometry::axisymmetric
                    ? io::make_snapshot(ev.axi_wave(), ev.potential(), ev.time())
                    : io::make_snapshot(ev.planar_wave(), ev.potential(),
                                        ev.time());
    snap.extra["step"] = std::to_string(ev.step());
    snap.extra["probe"] = std::to_string(ev.probe_i());
    snap.extra["probe_j"] = std::to_string(ev.probe_j());
    snap.extra["phase"] = io::format_full(ev.probe_phase());
    snap.extra["probe_re"] =
        io::format_full(ev.values()(ev.probe_i(), ev.probe_j()).real());
    snap.extra["probe_im"] =
        io::format_full(ev.values()(ev.probe_i(), ev.probe_j()).imag());
    snap.extra["rngstate"] = "none";
    io::write_snapshot(path, snap);
}

inline AdiEvolver resume_adi(const std::filesystem::path& path,
                             fields::EvolutionConfig cfg,
                             bool potential_off = false) {
    const auto snap = io::read_snapshot(path);
    cfg.perturbation.reset();
    fields::Potential2D pot;
    std::unique_ptr<AdiEvolver> ev;
    if (snap.kind == "axi") {
        fields::AxiWave w;
        io::to_fields(snap, w, pot);
        ev = std::make_unique<AdiEvolver>(w, cfg, potential_off);
        ev->set_state(w.values, pot);
    } else if (snap.kind == "planar") {
        fields::PlanarWave w;
        io::to_fields(snap, w, pot);
        ev = std::make_unique<AdiEvolver>(w, cfg, potential_off);
        ev->set_state(w.values, pot);
    } else {
        throw io_error("resume_adi: snapshot is not axi or planar");
    }
    ev->restore(snap.t, std::stoi(snap.extra.at("step")),
                std::stoi(snap.extra.at("probe")),
                std::stoi(snap.extra.at("probe_j")),
                std::stod(snap.extra.at("phase")),
                {std::stod(snap.extra.at("probe_re")),
                 std::stod(snap.extra.at("probe_im"))});
    return std::move(*ev);
}

} // namespace snlab::evolve
