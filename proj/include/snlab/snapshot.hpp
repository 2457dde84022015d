#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "snlab/errors.hpp"
#include "snlab/fields.hpp"

namespace snlab::io {

/// Shortest text form that round-trips an IEEE double exactly.
inline std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// On-disk field snapshot: one header line
///   # kind=<radial|axi|planar> n=<..> [m=<..>] L=<..> t=<..> [key=value ...]
/// then one comma-separated row per node: coordinates, Re, Im, phi.
/// Rows run row-major over (grid_a, grid_b).
struct Snapshot {
    std::string kind;
    int n = 0;
    int m = 0; // second dimension; 0 for radial
    double L = 0.0;
    double t = 0.0;
    std::map<std::string, std::string> extra; // E=, J2=, label=, step=, ...
    Eigen::MatrixXd coords;  // rows x (1 or 2)
    Eigen::VectorXcd values;
    Eigen::VectorXd phi;
};

inline Snapshot make_snapshot(const fields::RadialWave& w,
                              const fields::RadialPotential& pot, double t) {
    Snapshot s;
    s.kind = "radial";
    s.n = w.grid.n_points;
    s.L = w.grid.length;
    s.t = t;
    s.coords.resize(s.n, 1);
    s.coords.col(0) = w.grid.nodes;
    s.values = w.values;
    s.phi = pot.values;
    return s;
}

namespace detail {
template <typename Wave>
Snapshot make_snapshot_2d(const char* kind, const Wave& w,
                          const fields::Potential2D& pot, double t) {
    Snapshot s;
    s.kind = kind;
    s.n = w.grid.grid_a.n_points;
    s.m = w.grid.grid_b.n_points;
    s.L = w.grid.grid_a.length;
    s.t = t;
    const int rows = s.n * s.m;
    s.coords.resize(rows, 2);
    s.values.resize(rows);
    s.phi.resize(rows);
    for (int i = 0; i < s.n; ++i)
        for (int j = 0; j < s.m; ++j) {
            const int k = i * s.m + j;
            s.coords(k, 0) = w.grid.grid_a.nodes[i];
            s.coords(k, 1) = w.grid.grid_b.nodes[j];
            s.values[k] = w.values(i, j);
            s.phi[k] = pot.values(i, j);
        }
    return s;
}
} // namespace detail

inline Snapshot make_snapshot(const fields::AxiWave& w,
                              const fields::Potential2D& pot, double t) {
    return detail::make_snapshot_2d("axi", w, pot, t);
}

inline Snapshot make_snapshot(const fields::PlanarWave& w,
                              const fields::Potential2D& pot, double t) {
    return detail::make_snapshot_2d("planar", w, pot, t);
}

inline void write_snapshot(const std::filesystem::path& path, const Snapshot& s) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot open for writing: " + path.string());
    out << "# kind=" << s.kind << " n=" << s.n;
    if (s.m > 0)
        out << " m=" << s.m;
    out << " L=" << format_full(s.L) << " t=" << format_full(s.t);
    for (const auto& [k, v] : s.extra)
        out << ' ' << k << '=' << v;
    out << '\n';
    const int rows = static_cast<int>(s.values.size());
    for (int k = 0; k < rows; ++k) {
        for (int c = 0; c < s.coords.cols(); ++c)
            out << format_full(s.coords(k, c)) << ',';
        out << format_full(s.values[k].real()) << ','
            << format_full(s.values[k].imag()) << ','
            << format_full(s.phi[k]) << '\n';
    }
    if (!out)
        throw io_error("write failed: " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open: " + path.string());
    std::string header;
    std::getline(in, header);
    if (header.size() < 2 || header[0] != '#')
        throw io_error("missing snapshot header: " + path.string());
    Snapshot s;
    std::istringstream hs(header.substr(1));
    std::string tok;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw io_error("bad header token '" + tok + "' in " + path.string());
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "kind") s.kind = val;
        else if (key == "n") s.n = std::stoi(val);
        else if (key == "m") s.m = std::stoi(val);
        else if (key == "L") s.L = std::stod(val);
        else if (key == "t") s.t = std::stod(val);
        else s.extra[key] = val;
    }
    if (s.kind.empty() || s.n <= 0)
        throw io_error("incomplete snapshot header: " + path.string());
    const int rows = s.n * std::max(1, s.m);
    const int ncoord = (s.kind == "radial") ? 1 : 2;
    s.coords.resize(rows, ncoord);
    s.values.resize(rows);
    s.phi.resize(rows);
    std::string line;
    int k = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (k >= rows)
            throw io_error("too many rows in " + path.string());
        std::istringstream ls(line);
        double cell[6] = {0, 0, 0, 0, 0, 0};
        int c = 0;
        std::string piece;
        while (std::getline(ls, piece, ',')) {
            if (c >= ncoord + 3)
                throw io_error("too many columns in " + path.string());
            cell[c++] = std::stod(piece);
        }
        if (c != ncoord + 3)
            throw io_error("short row in " + path.string());
        for (int cc = 0; cc < ncoord; ++cc)
            s.coords(k, cc) = cell[cc];
        s.values[k] = {cell[ncoord], cell[ncoord + 1]};
        s.phi[k] = cell[ncoord + 2];
        ++k;
    }
    if (k != rows)
        throw io_error("row count mismatch in " + path.string());
    return s;
}

inline void to_fields(const Snapshot& s, fields::RadialWave& w,
                      fields::RadialPotential& pot) {
    if (s.kind != "radial")
        throw io_error("snapshot is not radial");
    w.grid = spectral::build_grid(s.n, s.L);
    w.values = s.values;
    pot.grid = w.grid;
    pot.values = s.phi;
}

namespace detail {
template <typename Wave>
void to_fields_2d(const Snapshot& s, Wave& w, fields::Potential2D& pot,
                  const spectral::TensorGrid2D& grid) {
    w.grid = grid;
    pot.grid = grid;
    w.values.resize(s.n, s.m);
    pot.values.resize(s.n, s.m);
    for (int i = 0; i < s.n; ++i)
        for (int j = 0; j < s.m; ++j) {
            const int k = i * s.m + j;
            w.values(i, j) = s.values[k];
            pot.values(i, j) = s.phi[k];
        }
}
} // namespace detail

inline void to_fields(const Snapshot& s, fields::AxiWave& w,
                      fields::Potential2D& pot) {
    if (s.kind != "axi")
        throw io_error("snapshot is not axi");
    detail::to_fields_2d(s, w, pot, spectral::build_polar_grid(s.n, s.L, s.m));
}

inline void to_fields(const Snapshot& s, fields::PlanarWave& w,
                      fields::Potential2D& pot) {
    if (s.kind != "planar")
        throw io_error("snapshot is not planar");
    detail::to_fields_2d(s, w, pot, spectral::build_planar_grid(s.n, s.L));
}

/// diagnostics.csv writer; one full-precision row per output time.
class DiagnosticsCsv {
public:
    static constexpr const char* header =
        "t,p_grid,E_conserved,E_functional,J2,probe_phase,phi_iterations";

    DiagnosticsCsv() = default;
    explicit DiagnosticsCsv(const std::filesystem::path& path, bool append = false) {
        open(path, append);
    }

    void open(const std::filesystem::path& path, bool append = false) {
        const bool write_header = !append || !std::filesystem::exists(path);
        out_.open(path, append ? std::ios::app : std::ios::trunc);
        if (!out_)
            throw io_error("cannot open for writing: " + path.string());
        if (write_header)
            out_ << header << '\n';
    }

    template <typename Record>
    void write(const Record& r) {
        out_ << format_full(r.t) << ',' << format_full(r.p_grid) << ','
             << format_full(r.E_conserved) << ',' << format_full(r.E_functional)
             << ',' << format_full(r.J2) << ',' << format_full(r.probe_phase)
             << ',' << r.phi_iterations << '\n';
        out_.flush();
    }

    bool is_open() const { return out_.is_open(); }

private:
    std::ofstream out_;
};

} // namespace snlab::io
