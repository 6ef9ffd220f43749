#include "resmeth/transport.hpp"
#include "resmeth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace resmeth::transport {

namespace {

constexpr double kMassTolerance = 1e-12;

void check_wasserstein_exponent(double p)
{
    if (!std::isfinite(p))
        throw InvalidInput("W_p exponent must be finite");
    if (p < 1.0)
        throw UnsupportedExponent("W_p needs p >= 1, got " + std::to_string(p));
}

double log_sum_exp(const std::vector<double>& v)
{
    const double top = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v)
        s += std::exp(x - top);
    return top + std::log(s);
}

// h * sum_j |c_j|, c the cumulative mass difference.
double masses_w1(const std::vector<double>& a, const std::vector<double>& b, double h)
{
    double c = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        c += a[i] - b[i];
        total += std::abs(c);
    }
    return h * total;
}

double masses_entropy(const std::vector<double>& q, double h)
{
    double e = 0.0;
    for (double m : q)
        if (m > 0.0)
            e += m * std::log(m / h);
    return e;
}

struct PenalizedRun {
    std::vector<double> q;
    double w1;
};

// Entropic mirror descent on  sum q log(q / h) + mu W_1(q, target)  over the simplex.
PenalizedRun mirror_descent(const std::vector<double>& target, double mu, double h, double length,
                            int iterations)
{
    const std::size_t n = target.size();
    const double log_h = std::log(h);
    std::vector<double> lq(n, -std::log(static_cast<double>(n)));
    std::vector<double> q(n, 1.0 / static_cast<double>(n));
    std::vector<double> tail(n);
    std::vector<double> best = q;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> average(n, 0.0);
    double weight_sum = 0.0;
    const double eta0 = 1.0 / (1.0 + mu * length);

    for (int t = 1; t <= iterations; ++t) {
        // Subgradient of W_1 in q_i is h * sum_{j >= i} sign(c_j).
        double c = 0.0;
        double w = 0.0;
        std::vector<double>& sgn = tail;
        for (std::size_t i = 0; i < n; ++i) {
            c += q[i] - target[i];
            w += std::abs(c);
            sgn[i] = std::abs(c) <= 1e-15 ? 0.0 : (c > 0.0 ? 1.0 : -1.0);
        }
        const double value = masses_entropy(q, h) + mu * h * w;
        if (value < best_value) {
            best_value = value;
            best = q;
        }
        double acc = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            acc += sgn[i];
            sgn[i] = acc;
        }
        const double eta = eta0 / std::sqrt(static_cast<double>(t));
        for (std::size_t i = 0; i < n; ++i)
            lq[i] -= eta * (lq[i] - log_h + mu * h * sgn[i]);
        const double norm = log_sum_exp(lq);
        for (std::size_t i = 0; i < n; ++i) {
            lq[i] -= norm;
            q[i] = std::exp(lq[i]);
            average[i] += eta * q[i];
        }
        weight_sum += eta;
    }
    for (double& a : average)
        a /= weight_sum;
    const double avg_value = masses_entropy(average, h) + mu * masses_w1(average, target, h);
    const double last_value = masses_entropy(q, h) + mu * masses_w1(q, target, h);
    if (avg_value < best_value) {
        best = average;
        best_value = avg_value;
    }
    if (last_value < best_value)
        best = q;
    const double w1 = masses_w1(best, target, h);
    return {std::move(best), w1};
}

GridDensity from_masses(double lower, double upper, const std::vector<double>& q)
{
    GridDensity u{lower, upper, q};
    const double h = u.cell_width();
    for (double& v : u.values)
        v /= h;
    return u;
}

double triangular_cdf(double x)
{
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    return x <= 0.5 ? 2.0 * x * x : 1.0 - 2.0 * (1.0 - x) * (1.0 - x);
}

double triangular_quantile(double t)
{
    return t <= 0.5 ? std::sqrt(t / 2.0) : 1.0 - std::sqrt((1.0 - t) / 2.0);
}

// Integral of |c - F| over [x0, x1] with F the triangular CDF. F is monotone,
// so the integrand changes sign at most once, at F^{-1}(c).
double abs_cdf_gap(double c, double x0, double x1)
{
    if (x1 <= x0)
        return 0.0;
    std::vector<double> cuts{x0, x1};
    if (x0 < 0.5 && 0.5 < x1)
        cuts.push_back(0.5);
    if (c > 0.0 && c < 1.0) {
        const double r = triangular_quantile(c);
        if (x0 < r && r < x1)
            cuts.push_back(r);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        // The integrand is a quadratic with constant sign on [a, b]; Simpson is exact.
        const double fa = std::abs(c - triangular_cdf(a));
        const double fm = std::abs(c - triangular_cdf(0.5 * (a + b)));
        const double fb = std::abs(c - triangular_cdf(b));
        total += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }
    return total;
}

} // namespace

void DiscreteMeasure::validate() const
{
    if (atoms.empty())
        throw InvalidInput("measure has no atoms");
    if (atoms.size() != weights.size())
        throw SizeError("atoms and weights differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!std::isfinite(atoms[i]) || !std::isfinite(weights[i]))
            throw InvalidInput("measure entries must be finite");
        if (!(weights[i] > 0.0))
            throw InvalidInput("measure weights must be positive");
        if (i > 0 && !(atoms[i] > atoms[i - 1]))
            throw InvalidInput("measure atoms must be strictly increasing");
        total += weights[i];
    }
    if (std::abs(total - 1.0) > kMassTolerance)
        throw InvalidInput("measure weights must sum to 1");
}

DiscreteMeasure make_measure(std::vector<double> atoms, std::vector<double> weights)
{
    if (atoms.size() != weights.size())
        throw SizeError("atoms and weights differ in length");
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    DiscreteMeasure mu;
    for (std::size_t i : order) {
        if (!mu.atoms.empty() && mu.atoms.back() == atoms[i]) {
            mu.weights.back() += weights[i];
        } else {
            mu.atoms.push_back(atoms[i]);
            mu.weights.push_back(weights[i]);
        }
    }
    mu.validate();
    return mu;
}

DiscreteMeasure empirical_measure(const std::vector<double>& samples)
{
    if (samples.empty())
        throw InvalidInput("no samples");
    std::vector<double> xs = samples;
    std::sort(xs.begin(), xs.end());
    DiscreteMeasure mu;
    std::vector<std::size_t> counts;
    for (double x : xs) {
        if (!std::isfinite(x))
            throw InvalidInput("samples must be finite");
        if (!mu.atoms.empty() && mu.atoms.back() == x) {
            ++counts.back();
        } else {
            mu.atoms.push_back(x);
            counts.push_back(1);
        }
    }
    const double k = static_cast<double>(xs.size());
    for (std::size_t c : counts)
        mu.weights.push_back(static_cast<double>(c) / k);
    mu.validate();
    return mu;
}

DiscreteMeasure mixture(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, double lambda)
{
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw InvalidInput("mixture weight must lie in [0, 1]");
    std::vector<double> atoms;
    std::vector<double> weights;
    for (std::size_t i = 0; i < mu1.atoms.size(); ++i) {
        if (lambda > 0.0) {
            atoms.push_back(mu1.atoms[i]);
            weights.push_back(lambda * mu1.weights[i]);
        }
    }
    for (std::size_t i = 0; i < mu2.atoms.size(); ++i) {
        if (lambda < 1.0) {
            atoms.push_back(mu2.atoms[i]);
            weights.push_back((1.0 - lambda) * mu2.weights[i]);
        }
    }
    return make_measure(std::move(atoms), std::move(weights));
}

double wasserstein_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p)
{
    check_wasserstein_exponent(p);
    mu.validate();
    nu.validate();
    // Walk the merged breakpoints of the two cumulative distribution functions;
    // between consecutive breakpoints both quantile functions are constant.
    std::size_t i = 0;
    std::size_t j = 0;
    double ca = mu.weights[0];
    double cb = nu.weights[0];
    double t = 0.0;
    double cost = 0.0;
    while (true) {
        const double next = std::min(ca, cb);
        cost += (next - t) * std::pow(std::abs(mu.atoms[i] - nu.atoms[j]), p);
        t = next;
        if (ca <= next) {
            if (++i == mu.atoms.size())
                break;
            ca += mu.weights[i];
        }
        if (cb <= next) {
            if (++j == nu.atoms.size())
                break;
            cb += nu.weights[j];
        }
    }
    return std::pow(cost, 1.0 / p);
}

double wasserstein_oracle_permutation(const std::vector<double>& xs, const std::vector<double>& ys, double p)
{
    check_wasserstein_exponent(p);
    if (xs.size() != ys.size())
        throw SizeError("permutation oracle needs equal atom counts");
    if (xs.empty() || xs.size() > 8)
        throw SizeError("permutation oracle supports 1 to 8 atoms");
    std::vector<std::size_t> perm(ys.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            cost += std::pow(std::abs(xs[i] - ys[perm[i]]), p);
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best / static_cast<double>(xs.size()), 1.0 / p);
}

ConvexityReport wp_convexity_check(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                                   const DiscreteMeasure& nu, double p, const std::vector<double>& lambda_grid)
{
    check_wasserstein_exponent(p);
    const double w1 = std::pow(wasserstein_discrete(mu1, nu, p), p);
    const double w2 = std::pow(wasserstein_discrete(mu2, nu, p), p);
    ConvexityReport report;
    for (double lambda : lambda_grid) {
        const double lhs = std::pow(wasserstein_discrete(mixture(mu1, mu2, lambda), nu, p), p);
        const double excess = lhs - (lambda * w1 + (1.0 - lambda) * w2);
        if (excess > report.max_violation) {
            report.max_violation = excess;
            report.worst_lambda = lambda;
        }
    }
    return report;
}

std::vector<double> GridDensity::masses() const
{
    const double h = cell_width();
    std::vector<double> q(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        q[i] = values[i] * h;
    return q;
}

DiscreteMeasure GridDensity::as_measure() const
{
    const double h = cell_width();
    std::vector<double> atoms;
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] > 0.0) {
            atoms.push_back(lower + (static_cast<double>(i) + 0.5) * h);
            weights.push_back(values[i] * h);
            total += values[i] * h;
        }
    }
    // Absorb the normalization slack so the measure tolerance (1e-12) holds.
    for (double& w : weights)
        w /= total;
    return make_measure(std::move(atoms), std::move(weights));
}

void GridDensity::validate() const
{
    if (!(std::isfinite(lower) && std::isfinite(upper) && lower < upper))
        throw InvalidInput("density domain must be a finite interval with lower < upper");
    if (values.size() < 2)
        throw InvalidInput("density needs at least 2 cells");
    double total = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0)
            throw InvalidInput("density values must be finite and nonnegative");
        total += v;
    }
    if (std::abs(total * cell_width() - 1.0) > 1e-10)
        throw InvalidInput("density does not integrate to 1");
}

GridDensity uniform_density(double lower, double upper, int cells)
{
    if (cells < 2)
        throw InvalidInput("density needs at least 2 cells");
    GridDensity u{lower, upper, std::vector<double>(static_cast<std::size_t>(cells), 1.0 / (upper - lower))};
    u.validate();
    return u;
}

GridDensity histogram(const std::vector<double>& samples, double lower, double upper, int cells)
{
    if (samples.empty())
        throw InvalidInput("no samples");
    if (cells < 2)
        throw InvalidInput("density needs at least 2 cells");
    if (!(std::isfinite(lower) && std::isfinite(upper) && lower < upper))
        throw InvalidInput("density domain must be a finite interval with lower < upper");
    std::vector<double> q(static_cast<std::size_t>(cells), 0.0);
    const double h = (upper - lower) / cells;
    const double w = 1.0 / static_cast<double>(samples.size());
    for (double x : samples) {
        if (!std::isfinite(x) || x < lower || x > upper)
            throw InvalidInput("sample outside the density domain");
        const auto idx = std::min(static_cast<long>((x - lower) / h), static_cast<long>(cells - 1));
        q[static_cast<std::size_t>(idx)] += w;
    }
    return from_masses(lower, upper, q);
}

double entropy(const GridDensity& u)
{
    u.validate();
    const double h = u.cell_width();
    double e = 0.0;
    for (double v : u.values)
        if (v > 0.0)
            e += v * std::log(v) * h;
    return e;
}

double grid_w1(const GridDensity& u, const GridDensity& v)
{
    if (u.values.size() != v.values.size() || u.lower != v.lower || u.upper != v.upper)
        throw SizeError("densities live on different grids");
    return masses_w1(u.masses(), v.masses(), u.cell_width());
}

DensityResult density_estimate(const std::vector<double>& samples, double beta, double lower, double upper,
                               int cells, const DensityOptions& opts)
{
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw InvalidInput("beta must be a finite number >= 0");
    if (opts.max_iterations < 1 || opts.penalty_bisections < 0 || !(opts.match_tolerance > 0.0))
        throw InvalidInput("invalid density options");
    const GridDensity hist = histogram(samples, lower, upper, cells);
    const std::vector<double> target = hist.masses();
    const double h = hist.cell_width();
    const double length = upper - lower;

    DensityResult result;
    auto finish = [&](GridDensity u, double penalty, bool active) {
        result.density = std::move(u);
        result.w1 = grid_w1(result.density, hist);
        result.entropy = entropy(result.density);
        result.penalty = penalty;
        result.constraint_active = active;
        return result;
    };

    if (beta == 0.0)
        return finish(hist, std::numeric_limits<double>::infinity(), true);
    const GridDensity flat = uniform_density(lower, upper, cells);
    if (grid_w1(flat, hist) <= beta)
        return finish(flat, 0.0, false);

    auto run = [&](double mu) {
        ++result.mirror_runs;
        return mirror_descent(target, mu, h, length, opts.max_iterations);
    };
    auto matched = [&](double w) { return std::abs(w - beta) <= opts.match_tolerance * beta; };

    // Feasible candidate with the largest W_1 seen so far, or the smallest W_1 if none is feasible.
    PenalizedRun best{{}, std::numeric_limits<double>::infinity()};
    double best_mu = 0.0;
    auto keep = [&](const PenalizedRun& r, double mu) {
        const bool r_ok = r.w1 <= beta;
        const bool b_ok = best.w1 <= beta;
        if ((r_ok && (!b_ok || r.w1 > best.w1)) || (!r_ok && !b_ok && r.w1 < best.w1)) {
            best = r;
            best_mu = mu;
        }
    };

    // Bracket mu by decades: W_1 decreases as the penalty grows.
    double mu_lo = 1.0;
    double mu_hi = 1.0;
    PenalizedRun r = run(1.0);
    keep(r, 1.0);
    if (r.w1 > beta) {
        for (int k = 0; k < 60 && r.w1 > beta && !matched(r.w1); ++k) {
            mu_lo = mu_hi;
            mu_hi *= 10.0;
            r = run(mu_hi);
            keep(r, mu_hi);
        }
    } else {
        for (int k = 0; k < 60 && r.w1 <= beta && !matched(r.w1); ++k) {
            mu_hi = mu_lo;
            mu_lo /= 10.0;
            r = run(mu_lo);
            keep(r, mu_lo);
        }
    }
    if (!matched(best.w1) && mu_lo < mu_hi) {
        for (int k = 0; k < opts.penalty_bisections; ++k) {
            const double mid = std::sqrt(mu_lo * mu_hi);
            r = run(mid);
            keep(r, mid);
            if (matched(r.w1))
                break;
            (r.w1 > beta ? mu_lo : mu_hi) = mid;
        }
    }

    std::vector<double> q = best.q;
    if (best.w1 > beta) {
        // W_1(theta q + (1 - theta) target, target) = theta W_1(q, target).
        const double theta = beta / best.w1;
        for (std::size_t i = 0; i < q.size(); ++i)
            q[i] = theta * q[i] + (1.0 - theta) * target[i];
    }
    const double total = std::accumulate(q.begin(), q.end(), 0.0);
    for (double& m : q)
        m /= total;
    return finish(from_masses(lower, upper, q), best_mu, true);
}

double triangular_pdf(double x)
{
    if (x < 0.0 || x > 1.0)
        return 0.0;
    return x <= 0.5 ? 4.0 * x : 4.0 * (1.0 - x);
}

std::vector<double> sample_triangular(int count, std::uint64_t seed)
{
    if (count < 1)
        throw InvalidInput("sample count must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> xs(static_cast<std::size_t>(count));
    for (double& x : xs)
        x = triangular_quantile(unit(rng));
    return xs;
}

double w1_to_triangular(const std::vector<double>& samples)
{
    if (samples.empty())
        throw InvalidInput("no samples");
    std::vector<double> xs = samples;
    std::sort(xs.begin(), xs.end());
    const double k = static_cast<double>(xs.size());
    double total = abs_cdf_gap(0.0, 0.0, std::clamp(xs.front(), 0.0, 1.0));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double a = std::clamp(xs[i], 0.0, 1.0);
        const double b = i + 1 < xs.size() ? std::clamp(xs[i + 1], 0.0, 1.0) : 1.0;
        total += abs_cdf_gap(static_cast<double>(i + 1) / k, a, b);
    }
    return total;
}

double l1_error_triangular(const GridDensity& u)
{
    u.validate();
    if (u.lower != 0.0 || u.upper != 1.0)
        throw InvalidInput("triangular comparison needs the domain [0, 1]");
    const double h = u.cell_width();
    double total = 0.0;
    for (int i = 0; i < u.cells(); ++i) {
        const double x0 = i * h;
        const double x1 = i + 1 == u.cells() ? 1.0 : (i + 1) * h;
        const double c = u.values[static_cast<std::size_t>(i)];
        std::vector<double> cuts{x0, x1};
        if (x0 < 0.5 && 0.5 < x1)
            cuts.push_back(0.5);
        // Crossings of the two linear branches with the level c.
        for (double r : {c / 4.0, 1.0 - c / 4.0})
            if (x0 < r && r < x1)
                cuts.push_back(r);
        std::sort(cuts.begin(), cuts.end());
        // |c - pdf| is linear with constant sign on each piece.
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            total += (cuts[k + 1] - cuts[k]) * std::abs(c - triangular_pdf(0.5 * (cuts[k] + cuts[k + 1])));
    }
    return total;
}

} // namespace resmeth::transport
