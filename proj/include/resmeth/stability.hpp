#pragma once

#include "resmeth/core.hpp"
#include "resmeth/solvers.hpp"

#include <iosfwd>
#include <vector>

namespace resmeth::stability {

struct StabilityRow {
    int k;
    double perturbation_size;
    double norm_gap;
    double r_gap;
    double value_gap;
    /// Gaps are NaN when the perturbed problem is infeasible.
    SolveStatus status;
};

struct StabilityReport {
    std::vector<StabilityRow> rows;
    SolveReport reference;
};

struct DataPerturbation {
    int k;
    Vector data;
    double beta;
};

/// k = 1, 2, 4, ..., max_k.
std::vector<int> default_schedule(int max_k = 64);

/// y_k = y + direction / k with the radius unchanged.
std::vector<DataPerturbation> data_schedule(const Problem& problem, const Vector& direction,
                                            const std::vector<int>& ks);

/// beta_k = beta (1 + 1/k) with the data unchanged.
std::vector<DataPerturbation> radius_schedule(const Problem& problem, const std::vector<int>& ks);

/// F_k = F + E / k.
std::vector<Matrix> operator_schedule(const Matrix& op, const Matrix& direction, const std::vector<int>& ks);

/// Solves every (y_k, beta_k) and compares with the solution of `problem`.
/// perturbation_size = ||y_k - y|| + |beta_k - beta|. Requires p > 1 and beta > 0.
StabilityReport run_data_stability(const Problem& problem, const std::vector<DataPerturbation>& schedule,
                                   const SolverOptions& opts = {});

/// perturbation_size is the spectral norm ||F_k - F||, which must be
/// nonincreasing along the schedule. `ks` labels the rows; empty means 1..N.
StabilityReport run_operator_stability(const Problem& problem, const std::vector<Matrix>& schedule,
                                       const SolverOptions& opts = {}, std::vector<int> ks = {});

struct ValueContinuityReport {
    double value_at_beta = 0.0;
    /// v(beta + eps) per grid entry.
    std::vector<double> values;
    /// v(beta) - v(beta + eps_min).
    double sup_gap = 0.0;
    /// max over the grid of v(beta + eps) - v(beta); <= 0 up to rounding.
    double monotonicity_excess = 0.0;
};

/// Solver settings fine enough to resolve value differences at eps = 1e-6:
/// discrepancy matched to 1e-12 relative, inner tolerance 1e-14.
SolverOptions value_options();

/// eps_grid must be strictly decreasing and positive.
ValueContinuityReport check_value_right_continuity(const Matrix& op, const Vector& data, double p, double beta,
                                                   const std::vector<double>& eps_grid,
                                                   const SolverOptions& opts = value_options());

struct InstabilityRow {
    double delta;
    double x;
    double objective;
};

struct InstabilityReport {
    /// delta = 0 first, then the given deltas in order.
    std::vector<InstabilityRow> rows;
    /// |x(delta_last) - x(0)|.
    double jump = 0.0;
};

/// min x^2 s.t. |x^3 - x^2 - (y + delta)| <= y, by grid search on [-3, 3]
/// with spacing `resolution` and `refinements` passes that shrink the spacing
/// by 100 around the incumbent. The grid contains 0 exactly.
InstabilityReport instability_demo(double y, const std::vector<double>& deltas, double resolution = 1e-3,
                                   int refinements = 2);

inline constexpr const char* kStabilityHeader = "k,perturbation_size,norm_gap,r_gap,value_gap";
inline constexpr const char* kInstabilityHeader = "delta,x,objective";

void write_report(std::ostream& out, const StabilityReport& report);
void write_report(std::ostream& out, const InstabilityReport& report);

} // namespace resmeth::stability
