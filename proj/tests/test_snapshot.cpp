#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "snlab/snapshot.hpp"

using namespace snlab;
namespace fs = std::filesystem;

namespace {
fs::path tmpdir() {
    const auto d = fs::temp_directory_path() / "snlab_snapshot_tests";
    fs::create_directories(d);
    return d;
}
} // namespace

TEST_CASE("radial snapshot round trip is bit exact", "[snapshot]") {
    const auto grid = spectral::build_grid(16, 3.0);
    fields::RadialWave w{grid, Eigen::VectorXcd(16)};
    fields::RadialPotential pot{grid, Eigen::VectorXd(16)};
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int j = 0; j < 16; ++j) {
        w.values[j] = {dist(rng) / 3.0, dist(rng) * 1e-7};
        pot.values[j] = dist(rng) * 1e3;
    }
    w.values[0] = w.values[15] = 0.0;
    auto snap = io::make_snapshot(w, pot, 0.1 + 0.2); // a non-representable t
    snap.extra["label"] = "test";
    const auto path = tmpdir() / "radial.csv";
    io::write_snapshot(path, snap);

    const auto back = io::read_snapshot(path);
    REQUIRE(back.kind == "radial");
    REQUIRE(back.n == 16);
    REQUIRE(back.L == 3.0);
    REQUIRE(back.t == snap.t);
    REQUIRE(back.extra.at("label") == "test");
    for (int j = 0; j < 16; ++j) {
        REQUIRE(back.values[j].real() == w.values[j].real());
        REQUIRE(back.values[j].imag() == w.values[j].imag());
        REQUIRE(back.phi[j] == pot.values[j]);
        REQUIRE(back.coords(j, 0) == grid.nodes[j]);
    }

    fields::RadialWave w2;
    fields::RadialPotential pot2;
    io::to_fields(back, w2, pot2);
    REQUIRE(w2.values == w.values);
    REQUIRE(pot2.values == pot.values);
}

TEST_CASE("axi snapshot round trip", "[snapshot]") {
    const auto grid = spectral::build_polar_grid(10, 2.0, 8);
    fields::AxiWave w{grid, Eigen::MatrixXcd(10, 8)};
    fields::Potential2D pot{grid, Eigen::MatrixXd(10, 8)};
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 8; ++j) {
            w.values(i, j) = {dist(rng), dist(rng)};
            pot.values(i, j) = dist(rng);
        }
    auto snap = io::make_snapshot(w, pot, 4.25);
    snap.extra["E"] = io::format_full(-0.0599);
    snap.extra["J2"] = io::format_full(5.1853);
    const auto path = tmpdir() / "axi.csv";
    io::write_snapshot(path, snap);
    const auto back = io::read_snapshot(path);
    REQUIRE(back.kind == "axi");
    REQUIRE(back.m == 8);
    REQUIRE(std::stod(back.extra.at("E")) == -0.0599);
    fields::AxiWave w2;
    fields::Potential2D pot2;
    io::to_fields(back, w2, pot2);
    REQUIRE(w2.values == w.values);
    REQUIRE(pot2.values == pot.values);
}

TEST_CASE("planar snapshot round trip", "[snapshot]") {
    const auto grid = spectral::build_planar_grid(9, 1.5);
    fields::PlanarWave w{grid, Eigen::MatrixXcd::Zero(9, 9)};
    fields::Potential2D pot{grid, Eigen::MatrixXd::Zero(9, 9)};
    w.values(4, 5) = {1.0 / 3.0, -2.0 / 7.0};
    pot.values(3, 3) = -1e-17;
    const auto path = tmpdir() / "planar.csv";
    io::write_snapshot(path, io::make_snapshot(w, pot, 0.0));
    fields::PlanarWave w2;
    fields::Potential2D pot2;
    io::to_fields(io::read_snapshot(path), w2, pot2);
    REQUIRE(w2.values == w.values);
    REQUIRE(pot2.values == pot.values);
}

TEST_CASE("snapshot error paths", "[snapshot]") {
    REQUIRE_THROWS_AS(io::read_snapshot(tmpdir() / "missing.csv"), io_error);
    const auto bad = tmpdir() / "bad.csv";
    std::ofstream(bad) << "no header here\n";
    REQUIRE_THROWS_AS(io::read_snapshot(bad), io_error);
    const auto short_rows = tmpdir() / "short.csv";
    std::ofstream(short_rows) << "# kind=radial n=4 L=1 t=0\n0,0,0,0\n";
    REQUIRE_THROWS_AS(io::read_snapshot(short_rows), io_error);
}

TEST_CASE("diagnostics csv format", "[snapshot]") {
    struct Row {
        double t, p_grid, E_conserved, E_functional, J2, probe_phase;
        int phi_iterations;
    };
    const auto path = tmpdir() / "diag.csv";
    {
        io::DiagnosticsCsv csv(path);
        csv.write(Row{0.0, 1.0, -0.5, -0.25, 0.0, 0.0, 0});
        csv.write(Row{0.5, 1.0 / 3.0, -0.5, -0.25, 1e-300, 3.14, 4});
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == io::DiagnosticsCsv::header);
    std::getline(in, line);
    REQUIRE(line == "0,1,-0.5,-0.25,0,0,0");
    std::getline(in, line);
    REQUIRE(line.substr(0, 22) == "0.5,0.3333333333333333");
}
