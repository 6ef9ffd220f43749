#pragma once

#include "resmeth/core.hpp"

#include <cstdint>

namespace resmeth {

struct SolverOptions {
    int max_outer_bisections = 60;
    int max_inner_iterations = 5000;
    /// Relative change of the iterate at which an inner run stops.
    double inner_tolerance = 1e-10;
    /// Accepted |discrepancy - beta|, relative to beta.
    double discrepancy_match_tolerance = 1e-6;
    /// Number of start points for p < 1.
    int restarts = 16;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// argmin_u 0.5 (u - v)^2 + t |u|^p for a scalar v.
///
/// p = 1 is soft thresholding and p = 2 is v / (1 + 2t). For 1 < p < 2 the
/// stationarity equation u + t p |u|^(p-1) = |v| has a unique root, found by
/// safeguarded Newton (p = 1.5 has a closed form in sqrt(u)). For p < 1 the
/// larger stationary point is compared against u = 0 and 0 wins ties.
double prox_lp_scalar(double v, double t, double p);

/// Componentwise prox_lp_scalar.
Vector prox_lp(const Vector& v, double t, double p);

/// Largest eigenvalue of F^T F by power iteration.
double largest_eigenvalue_gram(const Matrix& op);

/// Minimizes ||F x - y||^2 + alpha * R_p(x).
///
/// p >= 1 uses FISTA with gradient restart and step 1 / (2 L); the result is
/// the global minimizer up to tolerance. p < 1 runs monotone proximal descent
/// from `start` and returns a stationary point. Running out of iterations is
/// reported through `converged`, not thrown.
SolveReport tikhonov_min(const Matrix& op, const Vector& data, double alpha, double p,
                         const SolverOptions& opts);
SolveReport tikhonov_min(const Matrix& op, const Vector& data, double alpha, double p,
                         const SolverOptions& opts, const Vector& start);

/// Solves min R_p(x) s.t. ||F x - y|| <= beta.
///
/// ||y|| <= beta gives x = 0. Otherwise the Tikhonov parameter is searched so
/// that the discrepancy of the Tikhonov minimizer matches beta; for p >= 1 this
/// is a global solution. A radius at (or numerically at) the least-squares
/// residual is handled by minimizing R_p over the least-squares solution set.
/// p < 1 is forwarded to nonconvex_solve.
SolveReport residual_method_solve(const Problem& problem, const SolverOptions& opts = {});

/// Multistart version of residual_method_solve for 0 < p < 1.
SolveReport nonconvex_solve(const Problem& problem, const SolverOptions& opts = {});

} // namespace resmeth
