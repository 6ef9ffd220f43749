#pragma once

#include "resmeth/bregman.hpp"
#include "resmeth/core.hpp"
#include "resmeth/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace resmeth::rates {

enum class OperatorModel { GaussianIID };

struct RateInstanceSpec {
    Eigen::Index m = 64;
    Eigen::Index n = 128;
    double p = 1.0;
    /// Nonzeros of x_dagger; 0 requests a dense x_dagger.
    Eigen::Index sparsity = 5;
    OperatorModel operator_model = OperatorModel::GaussianIID;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct RateInstance {
    Matrix op;
    Vector x_dagger;
    double p = 1.0;
    /// Present for p >= 1.
    std::optional<bregman::SourceCertificate> certificate;
    std::vector<Eigen::Index> support;
    std::uint64_t seed_used = 0;
};

/// Draws F with N(0, 1/m) entries and a source element omega, then builds
/// x_dagger so that the subgradient of R_p at x_dagger equals F^T omega.
///
/// - p in (1, 2], dense: x_dagger inverts the gradient formula at xi = F^T omega.
/// - p in (1, 2], sparse: support = s largest |F^T omega|; the off-support
///   columns are projected onto the orthogonal complement of omega so that xi
///   vanishes there while staying unchanged on the support.
/// - p = 1: random support and signs; omega is the least-norm solution of
///   F_S^T omega = sign, accepted when |xi| < 1 - 1e-3 off the support.
/// - p < 1: random s-sparse x_dagger, no certificate.
/// Injectivity on the support (smallest singular value > 1e-6) is checked for
/// sparse instances. Failed draws are retried with seed + 1000 * attempt,
/// 20 attempts at most, after which ConstructionFailed is thrown.
RateInstance build_rate_instance(const RateInstanceSpec& spec);

struct RateRow {
    double beta;
    int seed;
    double err_l2;
    double err_lp;
    std::optional<double> bregman;
    double discrepancy;
    double objective_gap;
    /// ||F x_dagger - y||; kept in memory only, not written to the table.
    double noise = 0.0;
};

struct RateTable {
    std::vector<RateRow> rows;
    /// One entry per cell whose solve came back infeasible.
    std::vector<std::string> diagnostics;
};

struct RateExperimentOptions {
    std::vector<double> beta_grid;
    int seeds_per_beta = 10;
    SolverOptions solver;
    std::uint64_t base_seed = 0;
    /// Multiplies the noise magnitude u in [0.5, 1]; 0 gives exact data.
    double noise_scale = 1.0;
};

/// For each (beta, seed): y = F x_dagger + beta * u * e with e uniform on the
/// unit sphere and u uniform in [0.5, 1]. The pair (e, u) depends only on the
/// seed, so every beta sees the same noise shape. Rows come out in
/// (beta index, seed) order.
RateTable run_rate_experiment(const RateInstance& instance, const RateExperimentOptions& opts);

/// count points from lo to hi, equally spaced in log scale.
std::vector<double> geometric_grid(double lo, double hi, int count);

enum class RateColumn { ErrL2, ErrLp, Bregman, Discrepancy, ObjectiveGap };

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    /// Rows left out because the column was missing or not positive.
    std::size_t dropped = 0;
    std::size_t points = 0;
};

/// Least squares line through (log beta, log median over seeds of the column).
/// Throws InsufficientData with fewer than 3 usable beta values.
SlopeFit fit_loglog_slope(const RateTable& table, RateColumn column);

enum class RateNorm { L2, Lp };

/// Exponent of the convergence rate of ||x_beta - x_dagger|| in beta:
///   p in (1, 2) dense, l2 or lp     -> 1/2
///   p in [1, 2) sparse, l2          -> 1/p
///   p in (0, 1) sparse, l2          -> 1
/// Any other combination throws InvalidInput.
double expected_rate(double p, bool sparse, RateNorm norm);

void write_rate_table(std::ostream& out, const RateTable& table);

inline constexpr const char* kRateTableHeader = "beta,seed,err_l2,err_lp,bregman,discrepancy,objective_gap";

} // namespace resmeth::rates
