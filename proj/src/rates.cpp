#include "resmeth/rates.hpp"
#include "resmeth/csv.hpp"
#include "resmeth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

namespace resmeth::rates {

namespace {

constexpr int kMaxAttempts = 20;
constexpr double kFitTolerance = 1e-8;
constexpr double kInjectivityFloor = 1e-6;
constexpr double kOffSupportMargin = 1e-3;

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    std::uint64_t out[1];
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return out[0];
}

Vector gaussian_vector(Eigen::Index size, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i)
        v[i] = normal(rng);
    return v;
}

Matrix gaussian_operator(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix op(m, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    // Row-major fill keeps the draw independent of Eigen's storage order.
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            op(i, j) = scale * normal(rng);
    return op;
}

std::vector<Eigen::Index> random_support(Eigen::Index n, Eigen::Index s, std::mt19937_64& rng)
{
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(s));
    std::sort(idx.begin(), idx.end());
    return idx;
}

Matrix support_columns(const Matrix& op, const std::vector<Eigen::Index>& supp)
{
    Matrix sub(op.rows(), static_cast<Eigen::Index>(supp.size()));
    for (std::size_t j = 0; j < supp.size(); ++j)
        sub.col(static_cast<Eigen::Index>(j)) = op.col(supp[j]);
    return sub;
}

bool injective_on(const Matrix& op, const std::vector<Eigen::Index>& supp)
{
    if (supp.empty())
        return true;
    const Eigen::JacobiSVD<Matrix> svd(support_columns(op, supp));
    return svd.singularValues().minCoeff() > kInjectivityFloor;
}

// Inverse of xi = p sign(x) |x|^(p-1).
double invert_gradient(double xi, double p)
{
    if (xi == 0.0)
        return 0.0;
    return (xi > 0.0 ? 1.0 : -1.0) * std::pow(std::abs(xi) / p, 1.0 / (p - 1.0));
}

std::optional<RateInstance> attempt_smooth(const RateInstanceSpec& spec, std::mt19937_64& rng)
{
    RateInstance inst;
    inst.p = spec.p;
    inst.op = gaussian_operator(spec.m, spec.n, rng);
    const Vector omega = gaussian_vector(spec.m, rng);
    Vector xi = inst.op.transpose() * omega;
    if (spec.sparsity > 0) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(spec.n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return std::abs(xi[a]) > std::abs(xi[b]); });
        inst.support.assign(order.begin(), order.begin() + spec.sparsity);
        std::sort(inst.support.begin(), inst.support.end());
        std::vector<bool> on(static_cast<std::size_t>(spec.n), false);
        for (Eigen::Index i : inst.support)
            on[static_cast<std::size_t>(i)] = true;
        const Vector dir = omega.normalized();
        for (Eigen::Index j = 0; j < spec.n; ++j) {
            if (!on[static_cast<std::size_t>(j)]) {
                inst.op.col(j) -= dir * dir.dot(inst.op.col(j));
                xi[j] = 0.0;
            }
        }
        if (!injective_on(inst.op, inst.support))
            return std::nullopt;
    } else {
        inst.support.resize(static_cast<std::size_t>(spec.n));
        std::iota(inst.support.begin(), inst.support.end(), Eigen::Index{0});
    }
    inst.x_dagger = Vector::Zero(spec.n);
    for (Eigen::Index i : inst.support)
        inst.x_dagger[i] = invert_gradient(xi[i], spec.p);
    inst.certificate = bregman::source_certificate(inst.op, inst.x_dagger, spec.p);
    if (!(inst.certificate->fit_residual <= kFitTolerance))
        return std::nullopt;
    return inst;
}

std::optional<RateInstance> attempt_l1(const RateInstanceSpec& spec, std::mt19937_64& rng)
{
    RateInstance inst;
    inst.p = 1.0;
    inst.op = gaussian_operator(spec.m, spec.n, rng);
    inst.support = random_support(spec.n, spec.sparsity, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector signs(spec.sparsity);
    for (Eigen::Index j = 0; j < spec.sparsity; ++j)
        signs[j] = unit(rng) < 0.5 ? -1.0 : 1.0;
    const Matrix sub = support_columns(inst.op, inst.support);
    if (!injective_on(inst.op, inst.support))
        return std::nullopt;
    // Least-norm omega with F_S^T omega = signs.
    const Vector omega = sub * (sub.transpose() * sub).ldlt().solve(signs);
    const Vector xi = inst.op.transpose() * omega;
    std::vector<bool> on(static_cast<std::size_t>(spec.n), false);
    for (Eigen::Index i : inst.support)
        on[static_cast<std::size_t>(i)] = true;
    for (Eigen::Index j = 0; j < spec.n; ++j)
        if (!on[static_cast<std::size_t>(j)] && !(std::abs(xi[j]) < 1.0 - kOffSupportMargin))
            return std::nullopt;
    inst.x_dagger = Vector::Zero(spec.n);
    for (std::size_t j = 0; j < inst.support.size(); ++j)
        inst.x_dagger[inst.support[j]] = signs[static_cast<Eigen::Index>(j)] * (1.0 + unit(rng));
    inst.certificate = bregman::source_certificate(inst.op, inst.x_dagger, 1.0, xi);
    if (!(inst.certificate->fit_residual <= kFitTolerance))
        return std::nullopt;
    return inst;
}

std::optional<RateInstance> attempt_nonconvex(const RateInstanceSpec& spec, std::mt19937_64& rng)
{
    RateInstance inst;
    inst.p = spec.p;
    inst.op = gaussian_operator(spec.m, spec.n, rng);
    inst.support = random_support(spec.n, spec.sparsity, rng);
    if (!injective_on(inst.op, inst.support))
        return std::nullopt;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    inst.x_dagger = Vector::Zero(spec.n);
    for (Eigen::Index i : inst.support)
        inst.x_dagger[i] = (unit(rng) < 0.5 ? -1.0 : 1.0) * (1.0 + unit(rng));
    return inst;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

std::optional<double> column_value(const RateRow& row, RateColumn column)
{
    switch (column) {
    case RateColumn::ErrL2: return row.err_l2;
    case RateColumn::ErrLp: return row.err_lp;
    case RateColumn::Bregman: return row.bregman;
    case RateColumn::Discrepancy: return row.discrepancy;
    case RateColumn::ObjectiveGap: return row.objective_gap;
    }
    return std::nullopt;
}

} // namespace

void RateInstanceSpec::validate() const
{
    if (m < 1 || n < 1 || m > kMaxDimension || n > kMaxDimension)
        throw InvalidInput("instance dimensions must lie in [1, 2048]");
    check_exponent(p);
    if (sparsity < 0 || sparsity > n)
        throw InvalidInput("sparsity must lie in [0, n]");
    if (m < sparsity)
        throw InvalidInput("m must be at least the sparsity for injectivity on the support");
    if (p <= 1.0 && sparsity == 0)
        throw InvalidInput("p <= 1 instances need a sparse x_dagger (sparsity >= 1)");
}

RateInstance build_rate_instance(const RateInstanceSpec& spec)
{
    spec.validate();
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t seed = spec.rng_seed + 1000ULL * static_cast<std::uint64_t>(attempt);
        std::mt19937_64 rng(seed);
        std::optional<RateInstance> inst;
        if (spec.p > 1.0)
            inst = attempt_smooth(spec, rng);
        else if (spec.p == 1.0)
            inst = attempt_l1(spec, rng);
        else
            inst = attempt_nonconvex(spec, rng);
        if (inst) {
            inst->seed_used = seed;
            return std::move(*inst);
        }
    }
    throw ConstructionFailed("no admissible instance within " + std::to_string(kMaxAttempts) + " attempts");
}

std::vector<double> geometric_grid(double lo, double hi, int count)
{
    if (!(lo > 0.0 && hi >= lo) || count < 1)
        throw InvalidInput("geometric grid needs 0 < lo <= hi and count >= 1");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        grid[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    }
    grid.front() = lo;
    if (count > 1)
        grid.back() = hi;
    return grid;
}

RateTable run_rate_experiment(const RateInstance& instance, const RateExperimentOptions& opts)
{
    if (opts.seeds_per_beta < 1)
        throw InvalidInput("seeds_per_beta must be >= 1");
    for (double b : opts.beta_grid)
        if (!(b > 0.0))
            throw InvalidInput("beta grid entries must be > 0");
    const Eigen::Index m = instance.op.rows();
    const Vector clean = instance.op * instance.x_dagger;
    const double r_dagger = regularizer_value(instance.x_dagger, instance.p);

    // Noise shape per seed, shared across the beta grid.
    std::vector<Vector> shapes;
    for (int s = 0; s < opts.seeds_per_beta; ++s) {
        std::mt19937_64 rng(mix_seed(opts.base_seed, static_cast<std::uint64_t>(s)));
        Vector dir = gaussian_vector(m, rng);
        dir.normalize();
        std::uniform_real_distribution<double> magnitude(0.5, 1.0);
        shapes.push_back(magnitude(rng) * opts.noise_scale * dir);
    }

    RateTable table;
    for (std::size_t bi = 0; bi < opts.beta_grid.size(); ++bi) {
        const double beta = opts.beta_grid[bi];
        for (int s = 0; s < opts.seeds_per_beta; ++s) {
            Problem problem{instance.op, clean + beta * shapes[static_cast<std::size_t>(s)], beta, instance.p};
            SolverOptions solver = opts.solver;
            solver.rng_seed = mix_seed(opts.solver.rng_seed, bi * 1000003ULL + static_cast<std::uint64_t>(s));
            const SolveReport r = residual_method_solve(problem, solver);
            if (r.status == SolveStatus::Infeasible) {
                table.diagnostics.push_back("beta=" + csv::format_number(beta) + " seed=" + std::to_string(s) +
                                            ": infeasible although x_dagger is feasible");
                continue;
            }
            const Vector err = r.x - instance.x_dagger;
            RateRow row;
            row.beta = beta;
            row.seed = s;
            row.err_l2 = err.norm();
            row.err_lp = std::pow(regularizer_value(err, instance.p), 1.0 / instance.p);
            if (instance.certificate)
                row.bregman = bregman::bregman_distance(r.x, instance.x_dagger, instance.certificate->xi, instance.p);
            row.discrepancy = r.discrepancy;
            row.objective_gap = r.objective - r_dagger;
            row.noise = (problem.data - clean).norm();
            table.rows.push_back(row);
        }
    }
    return table;
}

SlopeFit fit_loglog_slope(const RateTable& table, RateColumn column)
{
    SlopeFit fit;
    std::map<double, std::vector<double>> by_beta;
    for (const RateRow& row : table.rows) {
        const std::optional<double> v = column_value(row, column);
        if (!v || !(*v > 0.0) || !std::isfinite(*v)) {
            ++fit.dropped;
            continue;
        }
        by_beta[row.beta].push_back(*v);
    }
    if (by_beta.size() < 3)
        throw InsufficientData("slope fit needs at least 3 distinct beta values with positive data, got " +
                               std::to_string(by_beta.size()));
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [beta, values] : by_beta) {
        xs.push_back(std::log(beta));
        ys.push_back(std::log(median(values)));
    }
    const double k = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0)
        throw InsufficientData("beta values are not distinct");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    fit.points = xs.size();
    return fit;
}

double expected_rate(double p, bool sparse, RateNorm norm)
{
    if (!sparse && p > 1.0 && p < 2.0)
        return 0.5;
    if (sparse && norm == RateNorm::L2 && p >= 1.0 && p < 2.0)
        return 1.0 / p;
    if (sparse && norm == RateNorm::L2 && p > 0.0 && p < 1.0)
        return 1.0;
    throw InvalidInput("no tabulated rate for this combination; supported: "
                       "dense p in (1,2) l2 or lp -> 1/2; sparse p in [1,2) l2 -> 1/p; "
                       "sparse p in (0,1) l2 -> 1");
}

void write_rate_table(std::ostream& out, const RateTable& table)
{
    out << kRateTableHeader << '\n';
    for (const RateRow& r : table.rows) {
        out << csv::format_number(r.beta) << ',' << r.seed << ',' << csv::format_number(r.err_l2) << ','
            << csv::format_number(r.err_lp) << ','
            << (r.bregman ? csv::format_number(*r.bregman) : std::string()) << ','
            << csv::format_number(r.discrepancy) << ',' << csv::format_number(r.objective_gap) << '\n';
    }
}

} // namespace resmeth::rates
