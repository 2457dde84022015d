#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "snlab/diagnostics.hpp"
#include "snlab/errors.hpp"
#include "snlab/fields.hpp"
#include "snlab/operators.hpp"
#include "snlab/poisson.hpp"

namespace snlab::stationary {

struct StationaryState {
    std::variant<fields::RadialWave, fields::AxiWave, fields::PlanarWave> wave;
    std::variant<fields::RadialPotential, fields::Potential2D> potential;
    double energy = 0.0; // eigenvalue, not the conserved energy
    double J2 = 0.0;
    double omega = 0.0;
    std::string label;

    template <typename W> const W& wave_as() const { return std::get<W>(wave); }
    template <typename P> const P& potential_as() const {
        return std::get<P>(potential);
    }
};

namespace detail {

inline int sign_changes(const Eigen::VectorXd& v, double rel_tol = 1e-8) {
    const double m = v.cwiseAbs().maxCoeff();
    int count = 0;
    double prev = 0.0;
    for (int j = 0; j < v.size(); ++j) {
        if (std::abs(v[j]) <= rel_tol * m)
            continue;
        if (prev != 0.0 && v[j] * prev < 0.0)
            ++count;
        prev = v[j];
    }
    return count;
}

// rotate an eigenvector to the real axis; returns false if genuinely complex
inline bool make_real(const Eigen::VectorXcd& v, Eigen::VectorXd& out) {
    int jmax = 0;
    double best = -1.0;
    for (int j = 0; j < v.size(); ++j)
        if (std::abs(v[j]) > best) {
            best = std::abs(v[j]);
            jmax = j;
        }
    const Eigen::VectorXcd rotated = v / (v[jmax] / std::abs(v[jmax]));
    if (rotated.imag().cwiseAbs().maxCoeff() > 1e-6 * best)
        return false;
    out = rotated.real();
    return true;
}

// one shift-inverted power iteration pass; x must hold the start vector
template <typename Mat, typename Vec>
double shift_invert(const Mat& H, double sigma, Vec& x, int iters = 40,
                    double tol = 1e-12) {
    using Scalar = typename Mat::Scalar;
    Mat A = H;
    A.diagonal().array() -= Scalar(sigma);
    const Eigen::PartialPivLU<Mat> lu(A);
    double lambda = sigma;
    for (int m = 0; m < iters; ++m) {
        Vec y = lu.solve(x);
        const double ny = y.norm();
        if (!(ny > 0.0) || !y.allFinite())
            throw numerical_failure("shift_invert: breakdown");
        y /= ny;
        x = y;
        const Vec Hx = H * x;
        lambda = std::real(Scalar(x.dot(Hx)));
        if ((Hx - Scalar(lambda) * x).norm() < tol * Hx.norm())
            break;
    }
    return lambda;
}

// deflated companion: converge a second eigenvector orthogonal to xref
template <typename Mat, typename Vec>
double shift_invert_deflated(const Mat& H, double sigma, const Vec& xref,
                             Vec& x, int iters = 40) {
    using Scalar = typename Mat::Scalar;
    Mat A = H;
    A.diagonal().array() -= Scalar(sigma);
    const Eigen::PartialPivLU<Mat> lu(A);
    double lambda = sigma;
    for (int m = 0; m < iters; ++m) {
        Vec y = lu.solve(x);
        y -= xref * (xref.dot(y));
        const double ny = y.norm();
        if (!(ny > 0.0))
            break;
        x = y / ny;
        lambda = std::real(Scalar(x.dot(H * x)));
    }
    return lambda;
}

} // namespace detail

/// Self-consistent spherically-symmetric state with k radial sign changes:
/// seed phi = -1/(1+r), eigensolve of -u'' + phi u = E u on the reduced
/// grid, selection by node count, Poisson update, under-relaxation.
inline StationaryState spherical_stationary(int k,
                                            const spectral::ChebyshevGrid1D& grid,
                                            double tol = 1e-10,
                                            int max_outer = 300,
                                            double relax = 0.5) {
    if (k < 0 || k >= grid.n_points / 4)
        throw std::invalid_argument("spherical_stationary: k not resolvable");
    const int n = grid.n_points;
    const int ni = n - 2;
    const Eigen::MatrixXd D2red = spectral::reduce_dirichlet(
        spectral::diff_matrix(grid, 2), spectral::Ends::both);
    poisson::RadialPoissonSolver psolver(grid);

    Eigen::VectorXd phi(n);
    for (int j = 0; j < n; ++j)
        phi[j] = -1.0 / (1.0 + grid.nodes[j]);

    Eigen::VectorXd ux;          // current reduced eigenvector
    double E = 0.0;
    std::vector<double> history;
    bool converged = false;
    for (int it = 0; it < max_outer; ++it) {
        Eigen::MatrixXd H = -D2red;
        for (int j = 0; j < ni; ++j)
            H(j, j) += phi[j + 1];
        if (it == 0) {
            const Eigen::EigenSolver<Eigen::MatrixXd> es(H);
            struct Cand { double E; Eigen::VectorXd v; };
            std::vector<Cand> cands;
            for (int m = 0; m < ni; ++m) {
                if (std::abs(es.eigenvalues()[m].imag()) > 1e-8)
                    continue;
                const double Em = es.eigenvalues()[m].real();
                if (Em >= 0.0)
                    continue;
                Eigen::VectorXd v;
                if (!detail::make_real(es.eigenvectors().col(m), v))
                    continue;
                if (detail::sign_changes(v) == k)
                    cands.push_back({Em, v});
            }
            if (cands.empty())
                throw selection_failure(
                    "spherical_stationary: no bound eigenfunction with " +
                    std::to_string(k) + " sign changes");
            auto best = std::min_element(
                cands.begin(), cands.end(),
                [](const Cand& a, const Cand& b) { return a.E < b.E; });
            E = best->E;
            ux = best->v;
        } else {
            E = detail::shift_invert(H, E, ux);
            if (detail::sign_changes(ux) != k)
                throw selection_failure(
                    "spherical_stationary: tracked mode lost its node count");
        }
        // normalize to unit probability, peak positive
        fields::RadialWave u{grid, Eigen::VectorXcd::Zero(n)};
        Eigen::VectorXd ufull = Eigen::VectorXd::Zero(n);
        ufull.segment(1, ni) = ux;
        int jmax;
        ufull.cwiseAbs().maxCoeff(&jmax);
        if (ufull[jmax] < 0.0)
            ufull = -ufull;
        ufull /= std::sqrt(grid.quad_weights.dot(ufull.cwiseAbs2()));
        u.values = ufull.cast<fields::complexd>();
        const auto pot_new = psolver.solve_density(ufull.cwiseAbs2());
        const double dphi = (pot_new.values - phi).cwiseAbs().maxCoeff();
        history.push_back(dphi);
        phi = (1.0 - relax) * phi + relax * pot_new.values;
        ux = ufull.segment(1, ni);
        ux.normalize();
        if (dphi < tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw non_convergence("spherical_stationary: phi loop did not converge",
                              history.empty() ? 0.0 : history.back(), history);

    // final eigenpair refresh against the converged potential
    Eigen::MatrixXd H = -D2red;
    for (int j = 0; j < ni; ++j)
        H(j, j) += phi[j + 1];
    E = detail::shift_invert(H, E, ux, 60);
    Eigen::VectorXd ufull = Eigen::VectorXd::Zero(n);
    ufull.segment(1, ni) = ux;
    int jmax;
    ufull.cwiseAbs().maxCoeff(&jmax);
    if (ufull[jmax] < 0.0)
        ufull = -ufull;
    ufull /= std::sqrt(grid.quad_weights.dot(ufull.cwiseAbs2()));

    StationaryState st;
    fields::RadialWave w{grid, ufull.cast<fields::complexd>()};
    fields::RadialPotential pot{grid, phi};
    st.energy = E;
    st.J2 = 0.0;
    st.omega = 0.0;
    st.label = (k == 0) ? "axi1" : (k == 1 ? "axi3" : "sph-k" + std::to_string(k));
    st.wave = std::move(w);
    st.potential = std::move(pot);
    return st;
}

struct AxiOptions {
    double tol = 1e-8;
    int max_outer = 200;
    double relax = 0.5;
    double rho = 0.0;        // PR-ADI parameter; <= 0 selects the ladder
    double pr_tol = 1e-10;
    int pr_max_iter = 4000;
};

namespace detail {

// reduced axisymmetric operator:
//   -u_rr - (1/(r^2 sin th))(sin th u_th)_th + phi u
// on interior-r x interior-theta unknowns, pole values eliminated through
// the Neumann conditions.
inline Eigen::MatrixXd axi_operator(const spectral::TensorGrid2D& grid,
                                    const Eigen::MatrixXd& phi,
                                    const Eigen::MatrixXd& D2r_red,
                                    const spectral::ThetaOperator& th_op) {
    const int nr = grid.grid_a.n_points;
    const int nt = grid.grid_b.n_points;
    const int ni = nr - 2, nj = nt - 2;
    const Eigen::MatrixXd M =
        (th_op.lambda_reg * th_op.neumann_R).block(1, 0, nj, nj);
    Eigen::MatrixXd Op = Eigen::MatrixXd::Zero(ni * nj, ni * nj);
    for (int i = 0; i < ni; ++i) {
        for (int kk = 0; kk < ni; ++kk) {
            const double c = -D2r_red(i, kk);
            if (c == 0.0)
                continue;
            for (int j = 0; j < nj; ++j)
                Op(i * nj + j, kk * nj + j) += c;
        }
        const double r = grid.grid_a.nodes[i + 1];
        Op.block(i * nj, i * nj, nj, nj) -= M / (r * r);
        for (int j = 0; j < nj; ++j)
            Op(i * nj + j, i * nj + j) += phi(i + 1, j + 1);
    }
    return Op;
}

// lift interior-reduced vector to the full grid through the pole conditions
inline Eigen::MatrixXd lift_axi(const Eigen::VectorXd& x,
                                const spectral::TensorGrid2D& grid,
                                const spectral::ThetaOperator& th_op) {
    const int nr = grid.grid_a.n_points;
    const int nt = grid.grid_b.n_points;
    const int ni = nr - 2, nj = nt - 2;
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(nr, nt);
    for (int i = 0; i < ni; ++i)
        U.row(i + 1) = (th_op.neumann_R * x.segment(i * nj, nj)).transpose();
    return U;
}

inline std::pair<int, int> count_axi_nodes(const Eigen::MatrixXd& U) {
    Eigen::Index imax = 0, jdummy = 0;
    U.cwiseAbs().rowwise().sum().maxCoeff(&imax, &jdummy);
    const int l = sign_changes(U.row(imax).transpose(), 1e-6);
    const int n_rad = sign_changes(U.col(0).segment(1, U.rows() - 2), 1e-6);
    return {l, n_rad};
}

inline std::string axi_label(int l, int n_rad) {
    if (l == 0 && n_rad == 0) return "axi1";
    if (l == 1 && n_rad == 0) return "axi2";
    if (l == 0 && n_rad == 1) return "axi3";
    return "l" + std::to_string(l) + "n" + std::to_string(n_rad);
}

} // namespace detail

/// The six-step axisymmetric procedure: seed potential, 2D eigensolve,
/// selection by (l, n) node counts then by overlap tracking, PR-ADI Poisson
/// update, symmetrization about theta = pi/2, repeat to tolerance.
inline StationaryState axi_stationary(int l, int n_rad,
                                      const spectral::TensorGrid2D& grid,
                                      const AxiOptions& opt = {}) {
    if (grid.role != spectral::GridRole::axisymmetric_polar)
        throw std::invalid_argument("axi_stationary: polar grid required");
    const int nr = grid.grid_a.n_points;
    const int nt = grid.grid_b.n_points;
    const int ni = nr - 2, nj = nt - 2;
    const Eigen::MatrixXd D2r_red = spectral::reduce_dirichlet(
        spectral::diff_matrix(grid.grid_a, 2), spectral::Ends::both);
    const auto th_op = spectral::make_theta_operator(grid.grid_b);
    poisson::PrAdiPoissonSolver psolver(grid, opt.rho);

    Eigen::MatrixXd phi(nr, nt);
    for (int i = 0; i < nr; ++i)
        phi.row(i).setConstant(-1.0 / (1.0 + grid.grid_a.nodes[i]));

    Eigen::VectorXd x;
    double E = 0.0;
    std::vector<double> history;
    bool converged = false;
    fields::AxiWave wave{grid, Eigen::MatrixXcd::Zero(nr, nt)};
    for (int it = 0; it < opt.max_outer; ++it) {
        const Eigen::MatrixXd Op =
            detail::axi_operator(grid, phi, D2r_red, th_op);
        if (it == 0) {
            const Eigen::EigenSolver<Eigen::MatrixXd> es(Op);
            struct Cand { double E; Eigen::VectorXd v; };
            std::vector<Cand> cands;
            for (int m = 0; m < Op.rows(); ++m) {
                if (std::abs(es.eigenvalues()[m].imag()) > 1e-7)
                    continue;
                const double Em = es.eigenvalues()[m].real();
                if (Em >= 0.0)
                    continue;
                Eigen::VectorXd v;
                if (!detail::make_real(es.eigenvectors().col(m), v))
                    continue;
                const auto [lc, nc] =
                    detail::count_axi_nodes(detail::lift_axi(v, grid, th_op));
                if (lc == l && nc == n_rad)
                    cands.push_back({Em, v});
            }
            if (cands.empty())
                throw selection_failure("axi_stationary: no (l=" +
                                        std::to_string(l) + ", n=" +
                                        std::to_string(n_rad) + ") mode found");
            auto best = std::min_element(
                cands.begin(), cands.end(),
                [](const Cand& a, const Cand& b) { return a.E < b.E; });
            E = best->E;
            x = best->v;
            x.normalize();
        } else {
            Eigen::VectorXd x1 = x;
            const double E1 = detail::shift_invert(Op, E, x1);
            Eigen::VectorXd x2 = Eigen::VectorXd::Ones(x.size()).normalized();
            const double E2 = detail::shift_invert_deflated(Op, E, x1, x2);
            const double o1 = std::abs(x.dot(x1));
            const double o2 = std::abs(x.dot(x2));
            if (std::abs(o1 - o2) < 0.01 * std::max(o1, o2))
                throw ambiguous_branch(
                    "axi_stationary: overlap selection ambiguous between E=" +
                        std::to_string(E1) + " and E=" + std::to_string(E2),
                    o1, o2);
            if (o1 >= o2) {
                E = E1;
                x = x1;
            } else {
                E = E2;
                x = x2;
            }
        }
        // normalize on the physical measure
        Eigen::MatrixXd U = detail::lift_axi(x, grid, th_op);
        {
            Eigen::Index im, jm;
            U.cwiseAbs().maxCoeff(&im, &jm);
            if (U(im, jm) < 0.0)
                U = -U;
        }
        wave.values = U.cast<fields::complexd>();
        const double p = fields::probability(wave);
        U /= std::sqrt(p);
        wave.values = U.cast<fields::complexd>();
        // Poisson update and symmetrization about theta = pi/2
        auto pot_new = psolver.solve(U.cwiseAbs2(), opt.pr_tol, opt.pr_max_iter);
        Eigen::MatrixXd sym(nr, nt);
        for (int j = 0; j < nt; ++j)
            sym.col(j) =
                0.5 * (pot_new.values.col(j) + pot_new.values.col(nt - 1 - j));
        const double dphi = (sym - phi).cwiseAbs().maxCoeff();
        history.push_back(dphi);
        phi = (1.0 - opt.relax) * phi + opt.relax * sym;
        for (int i = 0; i < ni; ++i)
            for (int j = 0; j < nj; ++j)
                x[i * nj + j] = U(i + 1, j + 1);
        x.normalize();
        if (dphi < opt.tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw non_convergence("axi_stationary: phi loop did not converge",
                              history.empty() ? 0.0 : history.back(), history);

    // refresh against the converged potential and normalize
    const Eigen::MatrixXd Op = detail::axi_operator(grid, phi, D2r_red, th_op);
    E = detail::shift_invert(Op, E, x, 60);
    Eigen::MatrixXd U = detail::lift_axi(x, grid, th_op);
    {
        Eigen::Index im, jm;
        U.cwiseAbs().maxCoeff(&im, &jm);
        if (U(im, jm) < 0.0)
            U = -U;
    }
    wave.values = U.cast<fields::complexd>();
    U /= std::sqrt(fields::probability(wave));
    wave.values = U.cast<fields::complexd>();

    StationaryState st;
    st.energy = E;
    st.J2 = diagnostics::angular_momentum_J2(wave);
    st.omega = 0.0;
    st.label = detail::axi_label(l, n_rad);
    st.wave = wave;
    st.potential = fields::Potential2D{grid, phi};
    return st;
}

struct RotatingOptions {
    double tol = 1e-8;
    int max_outer = 200;
    double relax = 0.5;
    double rho = 0.0;
    double pr_tol = 1e-10;
    int pr_max_iter = 4000;
    double min_branch_overlap = 0.5;
};

namespace detail {

// reduced planar operator -psi_xx - psi_yy + phi psi - i w (Y psi_X - X psi_Y)
inline Eigen::MatrixXcd planar_operator(const spectral::TensorGrid2D& grid,
                                        const Eigen::MatrixXd& phi,
                                        double omega) {
    const int nx = grid.grid_a.n_points;
    const int ny = grid.grid_b.n_points;
    const int ni = nx - 2, nj = ny - 2;
    const Eigen::MatrixXd D1x = spectral::diff_matrix(grid.grid_a, 1);
    const Eigen::MatrixXd D1y = spectral::diff_matrix(grid.grid_b, 1);
    const Eigen::MatrixXd D2x_red = spectral::reduce_dirichlet(
        spectral::diff_matrix(grid.grid_a, 2), spectral::Ends::both);
    const Eigen::MatrixXd D2y_red = spectral::reduce_dirichlet(
        spectral::diff_matrix(grid.grid_b, 2), spectral::Ends::both);
    const double cx = 0.5 * grid.grid_a.length, cy = 0.5 * grid.grid_b.length;
    Eigen::MatrixXcd Op = Eigen::MatrixXcd::Zero(ni * nj, ni * nj);
    const fields::complexd miw(0.0, -omega);
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < nj; ++j) {
            const int row = i * nj + j;
            for (int kk = 0; kk < ni; ++kk)
                Op(row, kk * nj + j) += -D2x_red(i, kk) +
                    miw * (grid.grid_b.nodes[j + 1] - cy) * D1x(i + 1, kk + 1);
            for (int ll = 0; ll < nj; ++ll)
                Op(row, i * nj + ll) += -D2y_red(j, ll) -
                    miw * (grid.grid_a.nodes[i + 1] - cx) * D1y(j + 1, ll + 1);
            Op(row, row) += phi(i + 1, j + 1);
        }
    return Op;
}

// project onto the parity-odd subspace psi(-x,-y) = -psi about the centre;
// node symmetry makes the index reflection exact
template <typename Vec>
void project_point_odd(Vec& x, int ni, int nj) {
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < nj; ++j) {
            const int a = i * nj + j;
            const int b = (ni - 1 - i) * nj + (nj - 1 - j);
            if (a < b) {
                const auto half = 0.5 * (x[a] - x[b]);
                x[a] = half;
                x[b] = -half;
            } else if (a == b) {
                x[a] = 0.0;
            }
        }
}

template <typename Vec>
void project_x_odd(Vec& x, int ni, int nj) {
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < nj; ++j) {
            const int a = i * nj + j;
            const int b = (ni - 1 - i) * nj + j;
            if (a < b) {
                const auto half = 0.5 * (x[a] - x[b]);
                x[a] = half;
                x[b] = -half;
            } else if (a == b) {
                x[a] = 0.0;
            }
        }
}

inline fields::PlanarWave lift_planar(const Eigen::VectorXcd& x,
                                      const spectral::TensorGrid2D& grid) {
    const int nx = grid.grid_a.n_points;
    const int ny = grid.grid_b.n_points;
    fields::PlanarWave w{grid, Eigen::MatrixXcd::Zero(nx, ny)};
    for (int i = 0; i < nx - 2; ++i)
        for (int j = 0; j < ny - 2; ++j)
            w.values(i + 1, j + 1) = x[i * (ny - 2) + j];
    return w;
}

struct PlanarScfResult {
    Eigen::VectorXcd x;
    Eigen::MatrixXd phi;
    double E = 0.0;
};

// self-consistent loop for the planar eigenproblem at fixed omega; keeps the
// iterate in the parity-odd subspace and tracks the branch by overlap
inline PlanarScfResult planar_scf(const spectral::TensorGrid2D& grid,
                                  Eigen::VectorXcd x, Eigen::MatrixXd phi,
                                  double E, double omega,
                                  const poisson::PrAdiPoissonSolver& psolver,
                                  const RotatingOptions& opt) {
    const int ni = grid.grid_a.n_points - 2;
    const int nj = grid.grid_b.n_points - 2;
    std::vector<double> history;
    for (int it = 0; it < opt.max_outer; ++it) {
        const Eigen::MatrixXcd Op = planar_operator(grid, phi, omega);
        Eigen::VectorXcd x1 = x;
        double E1 = E;
        {
            Eigen::MatrixXcd A = Op;
            A.diagonal().array() -= fields::complexd(E, 0.0);
            const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
            for (int m = 0; m < 40; ++m) {
                Eigen::VectorXcd y = lu.solve(x1);
                project_point_odd(y, ni, nj);
                const double ny = y.norm();
                if (!(ny > 0.0))
                    throw numerical_failure("planar_scf: iteration breakdown");
                x1 = y / ny;
                const Eigen::VectorXcd Hx = Op * x1;
                E1 = std::real(x1.dot(Hx));
                if ((Hx - fields::complexd(E1, 0.0) * x1).norm() <
                    1e-12 * Hx.norm())
                    break;
            }
        }
        const double o1 = std::abs(x.dot(x1));
        if (o1 < opt.min_branch_overlap)
            throw branch_lost("planar_scf: iterate strayed from the branch",
                              omega);
        E = E1;
        x = x1;
        // normalize and update the potential
        auto w = lift_planar(x, grid);
        const double p = fields::probability(w);
        x /= std::sqrt(p);
        w.values /= std::sqrt(p);
        const auto pot_new =
            psolver.solve(w.values.cwiseAbs2(), opt.pr_tol, opt.pr_max_iter);
        const double dphi = (pot_new.values - phi).cwiseAbs().maxCoeff();
        history.push_back(dphi);
        phi = (1.0 - opt.relax) * phi + opt.relax * pot_new.values;
        x.normalize();
        if (dphi < opt.tol)
            return {x, phi, E};
    }
    throw non_convergence("planar_scf: phi loop did not converge",
                          history.empty() ? 0.0 : history.back(), history);
}

// lowest parity-odd bound mode of -lap + phi, used to seed the dipole
inline std::pair<Eigen::VectorXcd, double>
planar_odd_ground(const spectral::TensorGrid2D& grid, const Eigen::MatrixXd& phi) {
    const int ni = grid.grid_a.n_points - 2;
    const int nj = grid.grid_b.n_points - 2;
    const Eigen::MatrixXcd Op = planar_operator(grid, phi, 0.0);
    const double sigma = phi.minCoeff() - 0.5; // below the spectrum bottom
    Eigen::MatrixXcd A = Op;
    A.diagonal().array() -= fields::complexd(sigma, 0.0);
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    Eigen::VectorXcd x(ni * nj);
    const double cx = 0.5 * grid.grid_a.length, cy = 0.5 * grid.grid_b.length;
    for (int i = 0; i < ni; ++i)
        for (int j = 0; j < nj; ++j) {
            const double dx = grid.grid_a.nodes[i + 1] - cx;
            const double dy = grid.grid_b.nodes[j + 1] - cy;
            x[i * nj + j] = dx * std::exp(-(dx * dx + dy * dy) / 10.0);
        }
    project_x_odd(x, ni, nj);
    x.normalize();
    double E = sigma;
    for (int m = 0; m < 200; ++m) {
        Eigen::VectorXcd y = lu.solve(x);
        project_x_odd(y, ni, nj);
        project_point_odd(y, ni, nj);
        x = y.normalized();
        const Eigen::VectorXcd Hx = Op * x;
        E = std::real(x.dot(Hx));
        if ((Hx - fields::complexd(E, 0.0) * x).norm() < 1e-11 * Hx.norm())
            break;
    }
    return {x, E};
}

} // namespace detail

/// Rigidly rotating planar state by continuation in omega from the planar
/// dipole: at each step the rotating-frame eigenproblem
///   -lap psi + phi psi - i w (Y psi_X - X psi_Y) = E psi
/// is solved self-consistently; the branch is tracked by overlap and an
/// overlap below the threshold reports the last good omega.
inline StationaryState rotating_stationary(double omega_target,
                                           double delta_omega,
                                           const spectral::TensorGrid2D& grid,
                                           const RotatingOptions& opt = {}) {
    if (grid.role != spectral::GridRole::planar_cartesian)
        throw std::invalid_argument("rotating_stationary: planar grid required");
    if (!(delta_omega > 0.0))
        throw std::invalid_argument("rotating_stationary: delta_omega must be > 0");
    if (std::abs(omega_target) > 0.02)
        throw std::invalid_argument(
            "rotating_stationary: |omega| beyond the continuation default");
    const int nx = grid.grid_a.n_points;
    const int ny = grid.grid_b.n_points;
    poisson::PrAdiPoissonSolver psolver(grid, opt.rho);

    Eigen::MatrixXd phi(nx, ny);
    const double cx = 0.5 * grid.grid_a.length, cy = 0.5 * grid.grid_b.length;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const double r = std::hypot(grid.grid_a.nodes[i] - cx,
                                        grid.grid_b.nodes[j] - cy);
            phi(i, j) = -1.0 / (1.0 + r);
        }
    auto [x, E] = detail::planar_odd_ground(grid, phi);
    auto scf = detail::planar_scf(grid, x, phi, E, 0.0, psolver, opt);

    const double sgn = (omega_target < 0.0) ? -1.0 : 1.0;
    double omega = 0.0;
    double last_good = 0.0;
    while (std::abs(omega_target - omega) > 1e-15) {
        const double next = sgn * std::min(std::abs(omega_target),
                                           std::abs(omega) + delta_omega);
        Eigen::VectorXcd x_prev = scf.x;
        try {
            scf = detail::planar_scf(grid, scf.x, scf.phi, scf.E, next, psolver,
                                     opt);
        } catch (const branch_lost&) {
            throw branch_lost("rotating_stationary: branch lost", last_good);
        }
        if (std::abs(x_prev.dot(scf.x)) < opt.min_branch_overlap)
            throw branch_lost("rotating_stationary: branch lost", last_good);
        omega = next;
        last_good = omega;
    }

    auto wave = detail::lift_planar(scf.x, grid);
    const double p = fields::probability(wave);
    wave.values /= std::sqrt(p);
    // fix the global phase: largest component real positive
    Eigen::Index im, jm;
    wave.values.cwiseAbs().maxCoeff(&im, &jm);
    wave.values *= std::abs(wave.values(im, jm)) / wave.values(im, jm);

    StationaryState st;
    st.energy = scf.E;
    st.J2 = diagnostics::angular_momentum_J2(wave);
    st.omega = omega_target;
    st.label = omega_target == 0.0 ? "planar-dipole" : "rot";
    st.wave = wave;
    st.potential = fields::Potential2D{grid, scf.phi};
    return st;
}

} // namespace snlab::stationary
