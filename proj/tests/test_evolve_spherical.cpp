#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "snlab/evolve_spherical.hpp"
#include "snlab/oracle.hpp"
#include "snlab/stationary.hpp"

using namespace snlab;
using Catch::Approx;
using complexd = std::complex<double>;
namespace fs = std::filesystem;

namespace {

fields::RadialWave gaussian_wave(const spectral::ChebyshevGrid1D& grid,
                                 double sigma, double a, double v) {
    const double C = oracle::normalize_gaussian(sigma, a, v, grid);
    fields::RadialWave w{grid, Eigen::VectorXcd(grid.n_points)};
    for (int j = 0; j < grid.n_points; ++j)
        w.values[j] = oracle::free_gaussian(grid.nodes[j], 0.0, sigma, a, v, C);
    w.values[0] = 0.0;
    w.values[grid.n_points - 1] = 0.0;
    return w;
}

const stationary::StationaryState& ground_state_n128() {
    static const auto state = stationary::spherical_stationary(
        0, spectral::build_grid(128, 60.0));
    return state;
}

} // namespace

TEST_CASE("zero field stays zero", "[evolve-spherical]") {
    const auto grid = spectral::build_grid(32, 10.0);
    fields::EvolutionConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.1;
    evolve::SphericalEvolver ev({grid, Eigen::VectorXcd::Zero(32)}, cfg);
    const int iters = ev.cn_step();
    REQUIRE(iters == 1);
    REQUIRE(ev.wave().values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("free evolution matches the analytic gaussian", "[evolve-spherical][slow]") {
    const auto grid = spectral::build_grid(256, 100.0);
    const double sigma = 6.0, a = 50.0, v = 0.0;
    const double C = oracle::normalize_gaussian(sigma, a, v, grid);
    fields::EvolutionConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    evolve::SphericalEvolver ev(gaussian_wave(grid, sigma, a, v), cfg,
                                /*potential_off=*/true);
    for (int s = 0; s < 100; ++s)
        ev.cn_step();
    double err = 0.0;
    for (int j = 0; j < grid.n_points; ++j)
        err = std::max(err, std::abs(ev.wave().values[j] -
                                     oracle::free_gaussian(grid.nodes[j], 1.0,
                                                           sigma, a, v, C)));
    REQUIRE(err < 1e-4);
}

TEST_CASE("ground state evolves by a phase", "[evolve-spherical][slow]") {
    const auto& gs = ground_state_n128();
    const auto& w0 = gs.wave_as<fields::RadialWave>();
    fields::EvolutionConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    evolve::SphericalEvolver ev(w0, cfg);

    const int iters = ev.cn_step();
    REQUIRE(iters <= 5);
    const complexd phase = std::exp(complexd(0.0, -gs.energy * cfg.dt));
    double err = 0.0;
    for (int j = 0; j < w0.grid.n_points; ++j)
        err = std::max(err, std::abs(ev.wave().values[j] - phase * w0.values[j]));
    REQUIRE(err < 1e-6);

    // run on to t = 1: modulus stationary, norm and energy conserved
    const double p0 = fields::probability(ev.wave());
    const double E0 = diagnostics::conserved_energy(ev.wave(), ev.potential());
    for (int s = 1; s < 100; ++s)
        ev.cn_step();
    double dmod = 0.0;
    for (int j = 0; j < w0.grid.n_points; ++j)
        dmod = std::max(dmod, std::abs(std::abs(ev.wave().values[j]) -
                                       std::abs(w0.values[j])));
    REQUIRE(dmod < 1e-4);
    REQUIRE(std::abs(fields::probability(ev.wave()) - p0) < 1e-8);
    const double E1 = diagnostics::conserved_energy(ev.wave(), ev.potential());
    REQUIRE(std::abs(E1 - E0) / std::abs(E0) < 1e-6);
}

TEST_CASE("probe phase grows linearly with slope -E", "[evolve-spherical][slow]") {
    const auto& gs = ground_state_n128();
    fields::EvolutionConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 2.0;
    cfg.output_every = 20;
    evolve::SphericalEvolver ev(gs.wave_as<fields::RadialWave>(), cfg);
    std::vector<diagnostics::DiagnosticsRecord> recs;
    evolve::EvolveCallbacks cb;
    cb.on_record = [&](const diagnostics::DiagnosticsRecord& r) {
        recs.push_back(r);
    };
    evolve::evolve(ev, cb);
    REQUIRE(recs.size() == 11);
    double st = 0, sp = 0, stt = 0, stp = 0;
    for (const auto& r : recs) {
        st += r.t;
        sp += r.probe_phase;
        stt += r.t * r.t;
        stp += r.t * r.probe_phase;
    }
    const double nrec = double(recs.size());
    const double slope = (nrec * stp - st * sp) / (nrec * stt - st * st);
    REQUIRE(slope == Approx(-gs.energy).epsilon(1e-3));
}

TEST_CASE("evolve with t_end 0 emits only the initial record", "[evolve-spherical]") {
    const auto grid = spectral::build_grid(32, 10.0);
    fields::EvolutionConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.0;
    evolve::SphericalEvolver ev({grid, Eigen::VectorXcd::Zero(32)}, cfg);
    int count = 0;
    evolve::EvolveCallbacks cb;
    cb.on_record = [&](const auto&) { ++count; };
    evolve::evolve(ev, cb);
    REQUIRE(count == 1);
    REQUIRE(ev.step() == 0);
}

TEST_CASE("t_end must be a multiple of dt", "[evolve-spherical]") {
    const auto grid = spectral::build_grid(32, 10.0);
    fields::EvolutionConfig cfg;
    cfg.dt = 3e-2;
    cfg.t_end = 0.1;
    evolve::SphericalEvolver ev({grid, Eigen::VectorXcd::Zero(32)}, cfg);
    evolve::EvolveCallbacks cb;
    REQUIRE_THROWS_AS(evolve::evolve(ev, cb), std::invalid_argument);
}

TEST_CASE("step failure after exhausting dt halving", "[evolve-spherical]") {
    const auto grid = spectral::build_grid(64, 60.0);
    auto w = gaussian_wave(grid, 4.0, 20.0, 0.0);
    fields::EvolutionConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    cfg.phi_max_iterations = 1; // can never meet the tolerance
    cfg.phi_tolerance = 1e-14;
    evolve::SphericalEvolver ev(w, cfg);
    REQUIRE_THROWS_AS(ev.cn_step(), step_failure);
}

TEST_CASE("sponge absorbs an outgoing pulse", "[evolve-spherical][slow]") {
    const auto grid = spectral::build_grid(192, 60.0);
    const double sigma = 4.0, a = 30.0, v = 1.0;
    const double C = oracle::normalize_gaussian(sigma, a, v, grid);
    auto w = gaussian_wave(grid, sigma, a, v); // fast outgoing pulse
    fields::EvolutionConfig cfg;
    cfg.dt = 2e-2;
    cfg.t_end = 40.0;
    cfg.sponge = fields::SpongeProfile{fields::SpongeProfile::Kind::radial,
                                       4.0, 0.3, 1.0, 20.0};
    evolve::SphericalEvolver ev(w, cfg, /*potential_off=*/true);
    double worst_reflected = 0.0;
    for (int s = 1; s <= 2000; ++s) {
        ev.cn_step();
        if (s % 100 != 0)
            continue;
        // probability that re-entered r < L/2: weighted square of the
        // difference against the exact free solution
        double reflected = 0.0;
        for (int j = 0; j < grid.n_points; ++j) {
            if (grid.nodes[j] > 30.0)
                break;
            const auto exact = oracle::free_gaussian(grid.nodes[j], ev.time(),
                                                     sigma, a, v, C);
            reflected += grid.quad_weights[j] *
                         std::norm(ev.wave().values[j] - exact);
        }
        worst_reflected = std::max(worst_reflected, reflected);
    }
    REQUIRE(worst_reflected < 1e-3);
    // probability on the grid is strictly below the free-solution value:
    // the sponge only removes
    REQUIRE(fields::probability(ev.wave()) < 1.0);
}

TEST_CASE("checkpoint resume reproduces the trajectory bit for bit",
          "[evolve-spherical][slow]") {
    const auto grid = spectral::build_grid(96, 60.0);
    auto w = gaussian_wave(grid, 4.0, 20.0, 0.0);
    fields::EvolutionConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.2;
    cfg.output_every = 4;
    cfg.perturbation = fields::Perturbation{1e-3, 1};

    std::vector<diagnostics::DiagnosticsRecord> full;
    {
        evolve::SphericalEvolver ev(w, cfg);
        evolve::EvolveCallbacks cb;
        cb.on_record = [&](const auto& r) { full.push_back(r); };
        evolve::evolve(ev, cb);
    }

    const auto dir = fs::temp_directory_path() / "snlab_resume_test";
    fs::create_directories(dir);
    const auto ckpt = dir / "checkpoint.csv";
    std::vector<diagnostics::DiagnosticsRecord> split;
    {
        fields::EvolutionConfig half = cfg;
        half.t_end = 0.12;
        evolve::SphericalEvolver ev(w, half);
        evolve::EvolveCallbacks cb;
        cb.on_record = [&](const auto& r) { split.push_back(r); };
        evolve::evolve(ev, cb);
        evolve::write_checkpoint(ev, ckpt);
    }
    {
        fields::EvolutionConfig rest = cfg;
        auto ev = evolve::resume_spherical(ckpt, rest);
        REQUIRE(ev.time() == Approx(0.12).margin(1e-12));
        evolve::EvolveCallbacks cb;
        cb.on_record = [&](const auto& r) { split.push_back(r); };
        evolve::evolve(ev, cb);
    }
    REQUIRE(split.size() == full.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
        REQUIRE(split[i].t == full[i].t);
        REQUIRE(split[i].p_grid == full[i].p_grid);
        REQUIRE(split[i].E_conserved == full[i].E_conserved);
        REQUIRE(split[i].probe_phase == full[i].probe_phase);
    }
}
