#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>

#include "snlab/diagnostics.hpp"
#include "snlab/errors.hpp"
#include "snlab/fields.hpp"
#include "snlab/poisson.hpp"
#include "snlab/snapshot.hpp"

namespace snlab::evolve {

struct EvolveCallbacks {
    std::function<void(const diagnostics::DiagnosticsRecord&)> on_record;
    std::function<void(int step)> on_snapshot;
    std::function<void(int step)> on_checkpoint;
};

/// Crank-Nicolson evolution of the radial system
///     2(i - s(r)) (u^{n+1} - u^n)/dt = -D2(u^{n+1} + u^n)
///                                      + phi^{n+1} u^{n+1} + phi^n u^n
/// with the self-consistent phi^{n+1} found by an inner fixed-point loop
/// through the radial Poisson solve. Without a sponge s = 0 and the step is
/// the norm-preserving Cayley form. The sign on s is fixed by requiring
/// decay: with i u_t = -u_rr + phi u, the coefficient i - s turns the
/// equation into the forward heat equation u_t = u_rr / s where s dominates
/// and outgoing flux is absorbed.
class SphericalEvolver {
public:
    SphericalEvolver(fields::RadialWave initial, fields::EvolutionConfig cfg,
                     bool potential_off = false)
        : cfg_(std::move(cfg)), potential_off_(potential_off),
          wave_(std::move(initial)), poisson_(wave_.grid) {
        fields::validate(cfg_);
        const int n = wave_.grid.n_points;
        wave_.values[0] = 0.0;
        wave_.values[n - 1] = 0.0;
        if (cfg_.perturbation)
            fields::apply_perturbation(wave_, *cfg_.perturbation);
        D2c_ = spectral::reduce_dirichlet(spectral::diff_matrix(wave_.grid, 2),
                                          spectral::Ends::both)
                   .cast<fields::complexd>();
        sponge_ = Eigen::VectorXd::Zero(n);
        if (cfg_.sponge)
            for (int j = 0; j < n; ++j)
                sponge_[j] = fields::sponge_value_radial(
                    wave_.grid.nodes[j], *cfg_.sponge, wave_.grid.length);
        potential_ = potential_off_
                         ? fields::RadialPotential{wave_.grid,
                                                   Eigen::VectorXd::Zero(n)}
                         : poisson_.solve(wave_);
        probe_index_ = 0;
        double best = -1.0;
        for (int j = 0; j < n; ++j)
            if (std::abs(wave_.values[j]) > best) {
                best = std::abs(wave_.values[j]);
                probe_index_ = j;
            }
        probe_prev_ = wave_.values[probe_index_];
    }

    const fields::RadialWave& wave() const { return wave_; }
    const fields::RadialPotential& potential() const { return potential_; }
    const fields::EvolutionConfig& config() const { return cfg_; }
    double time() const { return t_; }
    int step() const { return step_; }
    int probe_index() const { return probe_index_; }
    double probe_phase() const { return probe_phase_; }
    bool potential_off() const { return potential_off_; }

    /// One full dt step; halves dt internally (up to 4 levels) if the inner
    /// iteration fails to converge. Returns the inner iterations used.
    int cn_step() {
        const int iters = try_step(cfg_.dt, 0);
        ++step_;
        return iters;
    }

    int advance_step() { return cn_step(); }

    diagnostics::DiagnosticsRecord record(int phi_iterations) {
        const fields::complexd probe_now = wave_.values[probe_index_];
        probe_phase_ = diagnostics::unwrap_phase(probe_phase_, probe_prev_,
                                                 probe_now);
        probe_prev_ = probe_now;
        diagnostics::DiagnosticsRecord r;
        r.t = t_;
        r.p_grid = fields::probability(wave_);
        r.E_conserved = diagnostics::conserved_energy(wave_, potential_);
        r.E_functional = diagnostics::energy_functional(wave_, potential_);
        r.J2 = 0.0;
        r.probe_phase = probe_phase_;
        r.phi_iterations = phi_iterations;
        return r;
    }

    // resume support: restore internals exactly as checkpointed
    void restore(double t, int step, int probe_index, double probe_phase,
                 fields::complexd probe_prev) {
        t_ = t;
        step_ = step;
        probe_index_ = probe_index;
        probe_phase_ = probe_phase;
        probe_prev_ = probe_prev;
    }
    void set_state(const fields::RadialWave& w, const fields::RadialPotential& p) {
        wave_ = w;
        potential_ = p;
    }

private:
    int try_step(double dt, int depth) {
        try {
            return attempt(dt);
        } catch (const non_convergence&) {
            if (depth >= 4)
                throw step_failure("cn_step: inner iteration failed after 4 halvings");
            int iters = try_step(0.5 * dt, depth + 1);
            iters += try_step(0.5 * dt, depth + 1);
            return iters;
        }
    }

    int attempt(double dt) {
        const int n = wave_.grid.n_points;
        const int ni = n - 2;
        Eigen::VectorXcd mdiag(ni);
        for (int j = 0; j < ni; ++j)
            mdiag[j] = fields::complexd(-2.0 * sponge_[j + 1] / dt, 2.0 / dt);
        const Eigen::VectorXcd ui = wave_.values.segment(1, ni);
        Eigen::VectorXcd rhs = mdiag.cwiseProduct(ui) - D2c_ * ui;
        for (int j = 0; j < ni; ++j)
            rhs[j] += potential_.values[j + 1] * ui[j];

        Eigen::VectorXd phik = potential_.values;
        Eigen::VectorXcd unew;
        int iters = 0;
        bool converged = potential_off_;
        for (int k = 0; k < cfg_.phi_max_iterations; ++k) {
            if (potential_off_) {
                // constant operator: factor once per dt and reuse
                auto it = frozen_lu_.find(dt);
                if (it == frozen_lu_.end()) {
                    Eigen::MatrixXcd A = D2c_;
                    for (int j = 0; j < ni; ++j)
                        A(j, j) += mdiag[j];
                    it = frozen_lu_.emplace(dt, A.partialPivLu()).first;
                }
                unew = it->second.solve(rhs);
                ++iters;
                break;
            }
            Eigen::MatrixXcd A = D2c_;
            for (int j = 0; j < ni; ++j)
                A(j, j) += mdiag[j] - phik[j + 1];
            unew = A.partialPivLu().solve(rhs);
            ++iters;
            Eigen::VectorXd dens = Eigen::VectorXd::Zero(n);
            for (int j = 0; j < ni; ++j)
                dens[j + 1] = std::norm(unew[j]);
            const auto pot_new = poisson_.solve_density(dens);
            const double d = (pot_new.values - phik).cwiseAbs().maxCoeff();
            phik = pot_new.values;
            if (d < cfg_.phi_tolerance) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw non_convergence("cn_step: phi iteration did not converge",
                                  0.0);
        wave_.values.segment(1, ni) = unew;
        wave_.values[0] = 0.0;
        wave_.values[n - 1] = 0.0;
        if (!potential_off_)
            potential_.values = phik;
        t_ += dt;
        return iters;
    }

    fields::EvolutionConfig cfg_;
    bool potential_off_ = false;
    fields::RadialWave wave_;
    fields::RadialPotential potential_;
    poisson::RadialPoissonSolver poisson_;
    Eigen::MatrixXcd D2c_;
    Eigen::VectorXd sponge_;
    double t_ = 0.0;
    int step_ = 0;
    int probe_index_ = 0;
    double probe_phase_ = 0.0;
    fields::complexd probe_prev_{0.0, 0.0};
    std::map<double, Eigen::PartialPivLU<Eigen::MatrixXcd>> frozen_lu_;
};

namespace detail {
inline int planned_steps(const fields::EvolutionConfig& cfg) {
    const int n = static_cast<int>(std::lround(cfg.t_end / cfg.dt));
    if (std::abs(n * cfg.dt - cfg.t_end) > 1e-9 * std::max(1.0, cfg.t_end))
        throw std::invalid_argument("evolve: t_end must be a multiple of dt");
    return n;
}
} // namespace detail

/// Run to t_end; emits records at the output cadence (and at the final
/// step), snapshots/checkpoints at theirs. On a step failure a last
/// checkpoint is emitted before the error propagates.
template <typename Evolver>
int evolve(Evolver& ev, const EvolveCallbacks& cb) {
    const auto& cfg = ev.config();
    const int n_steps = detail::planned_steps(cfg);
    if (ev.step() == 0 && cb.on_record)
        cb.on_record(ev.record(0));
    while (ev.step() < n_steps) {
        int iters = 0;
        try {
            iters = ev.advance_step();
        } catch (const step_failure&) {
            if (cb.on_checkpoint)
                cb.on_checkpoint(ev.step());
            throw;
        }
        const int s = ev.step();
        if (cb.on_record && (s % cfg.output_every == 0 || s == n_steps))
            cb.on_record(ev.record(iters));
        if (cb.on_snapshot && cfg.snapshot_every > 0 && s % cfg.snapshot_every == 0)
            cb.on_snapshot(s);
        if (cb.on_checkpoint && cfg.checkpoint_every > 0 &&
            (s % cfg.checkpoint_every == 0 || s == n_steps))
            cb.on_checkpoint(s);
    }
    return ev.step();
}

inline void write_checkpoint(const SphericalEvolver& ev,
                             const std::filesystem::path& path) {
    auto snap = io::make_snapshot(ev.wave(), ev.potential(), ev.time());
    snap.extra["step"] = std::to_string(ev.step());
    snap.extra["probe"] = std::to_string(ev.probe_index());
    snap.extra["phase"] = io::format_full(ev.probe_phase());
    snap.extra["probe_re"] =
        io::format_full(ev.wave().values[ev.probe_index()].real());
    snap.extra["probe_im"] =
        io::format_full(ev.wave().values[ev.probe_index()].imag());
    snap.extra["rngstate"] = "none";
    io::write_snapshot(path, snap);
}

/// Rebuild an evolver mid-run; the configuration must be the one the run
/// started with, minus the initial perturbation (already in the data).
inline SphericalEvolver resume_spherical(const std::filesystem::path& path,
                                         fields::EvolutionConfig cfg,
                                         bool potential_off = false) {
    const auto snap = io::read_snapshot(path);
    fields::RadialWave w;
    fields::RadialPotential pot;
    io::to_fields(snap, w, pot);
    cfg.perturbation.reset();
    SphericalEvolver ev(w, cfg, potential_off);
    ev.set_state(w, pot);
    ev.restore(snap.t, std::stoi(snap.extra.at("step")),
               std::stoi(snap.extra.at("probe")),
               std::stod(snap.extra.at("phase")),
               {std::stod(snap.extra.at("probe_re")),
                std::stod(snap.extra.at("probe_im"))});
    return ev;
}

} // namespace snlab::evolve
