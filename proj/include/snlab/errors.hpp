#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace snlab {

// Base for all failures raised by solvers and evolvers (CLI exit code 3).
class solver_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An iteration ran out of its budget; carries whatever residual/update
// history was accumulated so callers can diagnose or retry.
class non_convergence : public solver_error {
public:
    non_convergence(const std::string& what, double last_residual,
                    std::vector<double> history = {})
        : solver_error(what), last_residual_(last_residual),
          history_(std::move(history)) {}

    double last_residual() const { return last_residual_; }
    const std::vector<double>& history() const { return history_; }

private:
    double last_residual_;
    std::vector<double> history_;
};

// A single time step could not be completed even after dt halving.
class step_failure : public solver_error {
public:
    using solver_error::solver_error;
};

// Eigenfunction selection could not identify the requested mode.
class selection_failure : public solver_error {
public:
    using solver_error::solver_error;
};

// Two candidate eigenfunctions overlap the tracked state almost equally.
class ambiguous_branch : public solver_error {
public:
    ambiguous_branch(const std::string& what, double overlap_a, double overlap_b)
        : solver_error(what), overlap_a_(overlap_a), overlap_b_(overlap_b) {}
    double overlap_a() const { return overlap_a_; }
    double overlap_b() const { return overlap_b_; }

private:
    double overlap_a_, overlap_b_;
};

// Continuation in omega lost the solution branch.
class branch_lost : public solver_error {
public:
    branch_lost(const std::string& what, double last_good_omega)
        : solver_error(what), last_good_omega_(last_good_omega) {}
    double last_good_omega() const { return last_good_omega_; }

private:
    double last_good_omega_;
};

// The residual-probability bound requires a negative initial energy.
class bound_inapplicable : public solver_error {
public:
    using solver_error::solver_error;
};

// Rescaled-ground fit requested for a field with almost no probability left.
class fit_meaningless : public solver_error {
public:
    using solver_error::solver_error;
};

// A linear solve produced garbage (singular or non-finite); should not
// happen for valid grids.
class numerical_failure : public solver_error {
public:
    using solver_error::solver_error;
};

// Configuration file problems (CLI exit code 2).
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem problems (CLI exit code 4).
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace snlab
