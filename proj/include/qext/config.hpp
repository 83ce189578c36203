#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qext {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Point = Eigen::VectorXd;

// Every numerical tolerance and budget lives here; operations take a Config by const reference.
struct Config {
    // linear programming
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-8;
    double pivot_tol = 1e-11;
    int iteration_factor = 50;      // cap = factor * (rows + cols)
    int degenerate_streak = 25;     // degenerate pivots before bases are tracked; a repeated basis switches to Bland's rule

    // margins and membership
    double margin_ceiling = 1e6;
    double member_tol = 1e-9;       // open membership: margin > member_tol
    double closed_tol = 1e-7;       // closed membership: violation <= closed_tol
    double equality_slack = 1e-9;   // carrier equalities in open mode
    double contain_tol = 1e-9;      // engine-internal closure containment gap
    double interior_fraction = 0.5;
    double scale_gap_min = 1e-6;    // find_scale_factor fails when lambda_min > 1 - scale_gap_min
    int scale_bisect_iters = 48;
    int probe_directions = 48;      // random support directions for non-polyhedral containment
    double probe_box = 100.0;       // truncation box for probing unbounded inner sets

    // function evaluation
    double tol_bisect = 1e-6;
    int bisect_max_iter = 60;

    // extension engine
    double bottom_offset = 4e-7;    // lowest level sits this far above a finite infimum
    int max_down_blocks = 16;
    int max_candidates = 400;
    int max_shrink_halvings = 60;
};

inline const Config& default_config() {
    static const Config c{};
    return c;
}

struct QextError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : QextError {
    using QextError::QextError;
};
struct SolverFailure : QextError {
    using QextError::QextError;
};
struct EmptySetError : QextError {
    using QextError::QextError;
};
struct ScaleFailure : QextError {
    using QextError::QextError;
};
struct UnsupportedLeaf : QextError {
    using QextError::QextError;
};
struct DomainError : QextError {
    using QextError::QextError;
};
struct CoverageError : QextError {
    using QextError::QextError;
};
struct SpecError : QextError {
    using QextError::QextError;
};
struct GaugeUndefined : QextError {
    using QextError::QextError;
};
struct ConstructionError : QextError {
    using QextError::QextError;
};
struct InsufficientLevels : ConstructionError {
    using ConstructionError::ConstructionError;
};
struct PremiseError : ConstructionError {
    using ConstructionError::ConstructionError;
};
struct ScopeError : QextError {
    using QextError::QextError;
};
struct SamplingError : QextError {
    using QextError::QextError;
};

inline void require_dim(long got, long want, const char* what) {
    if (got != want)
        throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(want) +
                                ", got " + std::to_string(got));
}

}  // namespace qext
