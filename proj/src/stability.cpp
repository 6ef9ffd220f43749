#include "resmeth/stability.hpp"
#include "resmeth/csv.hpp"
#include "resmeth/errors.hpp"
#include "resmeth/value_function.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace resmeth::stability {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

StabilityRow compare(int k, double size, const SolveReport& ref, const SolveReport& r, double p)
{
    if (r.status == SolveStatus::Infeasible || ref.status == SolveStatus::Infeasible)
        return {k, size, kNaN, kNaN, kNaN, r.status};
    const double rk = regularizer_value(r.x, p);
    const double r0 = regularizer_value(ref.x, p);
    return {k, size, (r.x - ref.x).norm(), std::abs(rk - r0), std::abs(r.objective - ref.objective), r.status};
}

double spectral_norm(const Matrix& m)
{
    if (m.size() == 0)
        return 0.0;
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

struct Incumbent {
    double x = kNaN;
    double objective = std::numeric_limits<double>::infinity();

    void offer(double cand, double obj)
    {
        // Ties prefer the smaller |x|, then the smaller x.
        if (obj < objective || (obj == objective && (std::abs(cand) < std::abs(x) ||
                                                     (std::abs(cand) == std::abs(x) && cand < x)))) {
            x = cand;
            objective = obj;
        }
    }
};

InstabilityRow solve_cubic_example(double y, double delta, double resolution, int refinements)
{
    const double target = y + delta;
    auto is_feasible = [&](double x) { return std::abs(x * x * x - x * x - target) <= y; };
    Incumbent best;
    const auto half = static_cast<long long>(std::llround(3.0 / resolution));
    for (long long i = -half; i <= half; ++i) {
        const double x = static_cast<double>(i) * resolution;
        if (is_feasible(x))
            best.offer(x, x * x);
    }
    double step = resolution;
    for (int pass = 0; pass < refinements && std::isfinite(best.x); ++pass) {
        const double centre = best.x;
        const double fine = step / 100.0;
        for (int j = -200; j <= 200; ++j) {
            const double x = centre + j * fine;
            if (x >= -3.0 && x <= 3.0 && is_feasible(x))
                best.offer(x, x * x);
        }
        step = fine;
    }
    return {delta, best.x, best.objective};
}

} // namespace

std::vector<int> default_schedule(int max_k)
{
    if (max_k < 1)
        throw InvalidInput("max_k must be >= 1");
    std::vector<int> ks;
    for (int k = 1; k <= max_k; k *= 2)
        ks.push_back(k);
    return ks;
}

std::vector<DataPerturbation> data_schedule(const Problem& problem, const Vector& direction,
                                            const std::vector<int>& ks)
{
    if (direction.size() != problem.data.size())
        throw SizeError("perturbation direction has the wrong length");
    std::vector<DataPerturbation> out;
    for (int k : ks) {
        if (k < 1)
            throw InvalidInput("schedule indices must be >= 1");
        out.push_back({k, problem.data + direction / static_cast<double>(k), problem.beta});
    }
    return out;
}

std::vector<DataPerturbation> radius_schedule(const Problem& problem, const std::vector<int>& ks)
{
    std::vector<DataPerturbation> out;
    for (int k : ks) {
        if (k < 1)
            throw InvalidInput("schedule indices must be >= 1");
        out.push_back({k, problem.data, problem.beta * (1.0 + 1.0 / k)});
    }
    return out;
}

std::vector<Matrix> operator_schedule(const Matrix& op, const Matrix& direction, const std::vector<int>& ks)
{
    if (direction.rows() != op.rows() || direction.cols() != op.cols())
        throw SizeError("operator perturbation has the wrong shape");
    std::vector<Matrix> out;
    for (int k : ks) {
        if (k < 1)
            throw InvalidInput("schedule indices must be >= 1");
        out.push_back(op + direction / static_cast<double>(k));
    }
    return out;
}

StabilityReport run_data_stability(const Problem& problem, const std::vector<DataPerturbation>& schedule,
                                   const SolverOptions& opts)
{
    problem.validate();
    if (!(problem.p > 1.0))
        throw InvalidInput("data stability needs p > 1 (unique minimizers)");
    if (!(problem.beta > 0.0))
        throw InvalidInput("data stability needs beta > 0");
    StabilityReport report;
    report.reference = residual_method_solve(problem, opts);
    for (const DataPerturbation& cell : schedule) {
        Problem perturbed{problem.op, cell.data, cell.beta, problem.p};
        perturbed.validate();
        const double size = (cell.data - problem.data).norm() + std::abs(cell.beta - problem.beta);
        const SolveReport r = residual_method_solve(perturbed, opts);
        report.rows.push_back(compare(cell.k, size, report.reference, r, problem.p));
    }
    return report;
}

StabilityReport run_operator_stability(const Problem& problem, const std::vector<Matrix>& schedule,
                                       const SolverOptions& opts, std::vector<int> ks)
{
    problem.validate();
    if (!(problem.beta > 0.0))
        throw InvalidInput("operator stability needs beta > 0");
    if (ks.empty())
        for (std::size_t i = 0; i < schedule.size(); ++i)
            ks.push_back(static_cast<int>(i + 1));
    if (ks.size() != schedule.size())
        throw SizeError("one label per operator is required");
    std::vector<double> sizes;
    for (const Matrix& op_k : schedule) {
        if (op_k.rows() != problem.op.rows() || op_k.cols() != problem.op.cols())
            throw SizeError("perturbed operator has the wrong shape");
        sizes.push_back(spectral_norm(op_k - problem.op));
        if (sizes.size() > 1 && sizes.back() > sizes[sizes.size() - 2] * (1.0 + 1e-12))
            throw InvalidInput("operator schedule must have nonincreasing ||F_k - F||");
    }
    StabilityReport report;
    report.reference = residual_method_solve(problem, opts);
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const Problem perturbed{schedule[i], problem.data, problem.beta, problem.p};
        const SolveReport r = residual_method_solve(perturbed, opts);
        report.rows.push_back(compare(ks[i], sizes[i], report.reference, r, problem.p));
    }
    return report;
}

SolverOptions value_options()
{
    SolverOptions opts;
    opts.discrepancy_match_tolerance = 1e-12;
    opts.inner_tolerance = 1e-14;
    opts.max_inner_iterations = 200000;
    opts.max_outer_bisections = 200;
    return opts;
}

ValueContinuityReport check_value_right_continuity(const Matrix& op, const Vector& data, double p, double beta,
                                                   const std::vector<double>& eps_grid,
                                                   const SolverOptions& opts)
{
    if (!(beta > 0.0))
        throw InvalidInput("beta must be > 0");
    if (eps_grid.empty())
        throw InvalidInput("eps grid is empty");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0))
            throw InvalidInput("eps grid entries must be > 0");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))
            throw InvalidInput("eps grid must be strictly decreasing");
    }
    // value_function wants ascending radii: beta, then beta + eps from small to large.
    std::vector<double> grid{beta};
    for (auto it = eps_grid.rbegin(); it != eps_grid.rend(); ++it)
        grid.push_back(beta + *it);
    const std::vector<ValuePoint> v = value_function(op, data, p, grid, opts);

    ValueContinuityReport report;
    report.value_at_beta = v.front().value;
    report.values.resize(eps_grid.size());
    report.monotonicity_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        const double vi = v[grid.size() - 1 - i].value;
        report.values[i] = vi;
        report.monotonicity_excess = std::max(report.monotonicity_excess, vi - report.value_at_beta);
    }
    report.sup_gap = report.value_at_beta - report.values.back();
    return report;
}

InstabilityReport instability_demo(double y, const std::vector<double>& deltas, double resolution, int refinements)
{
    if (!(y > 0.0) || !std::isfinite(y))
        throw InvalidInput("y must be a positive finite number");
    if (!(resolution > 0.0) || resolution > 1.0)
        throw InvalidInput("resolution must lie in (0, 1]");
    if (refinements < 0)
        throw InvalidInput("refinements must be >= 0");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0))
            throw InvalidInput("deltas must be positive");
        if (i > 0 && !(deltas[i] < deltas[i - 1]))
            throw InvalidInput("deltas must be strictly decreasing");
    }
    InstabilityReport report;
    report.rows.push_back(solve_cubic_example(y, 0.0, resolution, refinements));
    for (double d : deltas)
        report.rows.push_back(solve_cubic_example(y, d, resolution, refinements));
    report.jump = std::abs(report.rows.back().x - report.rows.front().x);
    return report;
}

void write_report(std::ostream& out, const StabilityReport& report)
{
    std::vector<std::vector<double>> rows;
    for (const StabilityRow& r : report.rows)
        rows.push_back({static_cast<double>(r.k), r.perturbation_size, r.norm_gap, r.r_gap, r.value_gap});
    csv::write_table(out, kStabilityHeader, rows);
}

void write_report(std::ostream& out, const InstabilityReport& report)
{
    std::vector<std::vector<double>> rows;
    for (const InstabilityRow& r : report.rows)
        rows.push_back({r.delta, r.x, r.objective});
    csv::write_table(out, kInstabilityHeader, rows);
}

} // namespace resmeth::stability
