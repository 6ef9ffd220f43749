#pragma once

#include <cstdint>
#include <vector>

namespace resmeth::transport {

/// Atoms strictly increasing, weights positive and summing to 1 (1e-12).
struct DiscreteMeasure {
    std::vector<double> atoms;
    std::vector<double> weights;

    void validate() const;
};

/// Sorts the atoms, merges duplicates and validates the result.
DiscreteMeasure make_measure(std::vector<double> atoms, std::vector<double> weights);

/// Uniform weights 1/k on the samples, duplicates merged.
DiscreteMeasure empirical_measure(const std::vector<double>& samples);

/// lambda * mu1 + (1 - lambda) * mu2.
DiscreteMeasure mixture(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, double lambda);

/// Exact W_p on the line from the merged quantile functions:
/// W_p^p = sum over merged CDF segments of mass * |location difference|^p.
/// p < 1 throws UnsupportedExponent.
double wasserstein_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

/// min over permutations sigma of ((1/k) sum |x_i - y_sigma(i)|^p)^(1/p).
/// Both lists need the same length k in [1, 8].
double wasserstein_oracle_permutation(const std::vector<double>& xs, const std::vector<double>& ys, double p);

struct ConvexityReport {
    double max_violation = 0.0;
    double worst_lambda = 0.0;
};

/// Checks W_p(l mu1 + (1-l) mu2, nu)^p <= l W_p(mu1, nu)^p + (1-l) W_p(mu2, nu)^p
/// on the lambda grid. max_violation is the largest excess, floored at 0.
ConvexityReport wp_convexity_check(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                   const DiscreteMeasure& nu, double p, const std::vector<double>& lambda_grid);

/// Piecewise constant density on `cells` equal cells of [lower, upper].
struct GridDensity {
    double lower = 0.0;
    double upper = 1.0;
    std::vector<double> values;

    int cells() const { return static_cast<int>(values.size()); }
    double cell_width() const { return (upper - lower) / static_cast<double>(values.size()); }
    /// Cell masses values[i] * cell_width.
    std::vector<double> masses() const;
    /// Atoms at the cell centres, empty cells dropped.
    DiscreteMeasure as_measure() const;
    void validate() const;
};

GridDensity uniform_density(double lower, double upper, int cells);

/// Binned empirical measure as a density. The last cell is closed on the right.
GridDensity histogram(const std::vector<double>& samples, double lower, double upper, int cells);

/// sum u_i log(u_i) h with 0 log 0 = 0.
double entropy(const GridDensity& u);

/// W_1 between two densities on the same grid: h * sum_j |sum_{i<=j} (mass_u - mass_v)|.
double grid_w1(const GridDensity& u, const GridDensity& v);

struct DensityOptions {
    int max_iterations = 20000;
    int penalty_bisections = 40;
    /// Accepted |W_1 - beta| relative to beta.
    double match_tolerance = 1e-4;
};

struct DensityResult {
    GridDensity density;
    double w1 = 0.0;
    double entropy = 0.0;
    /// Penalty weight of the accepted iterate; 0 when the constraint is inactive.
    double penalty = 0.0;
    bool constraint_active = false;
    int mirror_runs = 0;
};

/// min entropy(u) s.t. W_1(u, histogram(samples)) <= beta over densities on
/// the grid. The penalized problem entropy + mu W_1 is solved by entropic
/// mirror descent (step 1 / ((1 + mu (b - a)) sqrt(t)), averaged iterate) and
/// mu is bisected in log scale until W_1 matches beta. The accepted iterate is
/// finally mixed with the histogram if needed, which scales W_1 linearly, so
/// the output always satisfies W_1 <= beta.
DensityResult density_estimate(const std::vector<double>& samples, double beta, double lower, double upper,
                               int cells, const DensityOptions& opts = {});

/// Symmetric triangular density on [0, 1] with peak 2 at 1/2.
double triangular_pdf(double x);
/// Inverse-CDF sampling from triangular_pdf.
std::vector<double> sample_triangular(int count, std::uint64_t seed);
/// W_1 between the empirical measure of the samples and triangular_pdf.
double w1_to_triangular(const std::vector<double>& samples);
/// Integral of |u - triangular_pdf| over [0, 1]; u must live on [0, 1].
double l1_error_triangular(const GridDensity& u);

} // namespace resmeth::transport
