#include "resmeth/oracle.hpp"
#include "resmeth/errors.hpp"

#include <array>
#include <cmath>
#include <iterator>
#include <set>
#include <limits>
#include <string>
#include <vector>

namespace resmeth::oracle {

namespace {

// Candidate cells kept per refinement level, so that one level evaluates about
// kLevelBudget points whatever the dimension.
constexpr double kLevelBudget = 1e6;

using Point = std::array<double, 3>;

struct Cell {
    double rank;
    double lower_bound;
    Point centre;
};

bool operator<(const Cell& a, const Cell& b)
{
    if (a.rank != b.rank)
        return a.rank < b.rank;
    return a.centre < b.centre;
}

// Branch and bound over cubes. A cube with centre c and half-width h is kept
// while it may contain a feasible point, i.e.
// ||F c - y|| - ||F|| h sqrt(n) <= beta + tol, and the smallest value of R_p
// on it is below the best feasible value found so far. When more cubes qualify
// than the level budget allows, the ones kept are those whose centre is cheapest
// to move onto the constraint to first order.
class CellSearch {
public:
    CellSearch(const Problem& problem, std::size_t capacity)
        : problem_(problem), n_(static_cast<std::size_t>(problem.cols())),
          limit_(problem.beta + default_feasibility_tolerance(problem)), capacity_(capacity)
    {
        opnorm_ = problem.op.size() == 0 ? 0.0 : Eigen::JacobiSVD<Matrix>(problem.op).singularValues()(0);
        best_x_ = Vector::Zero(problem.cols());
    }

    // Level 0: every grid point lower + i * step of the box.
    void scan_grid(const Vector& lower, double step, const std::vector<long>& counts)
    {
        half_ = 0.5 * step;
        std::vector<Vector> partial(n_ + 1, Vector(problem_.rows()));
        partial[0] = -problem_.data;
        Point c{};
        auto recurse = [&](auto&& self, std::size_t d, double lb) -> void {
            const auto col = static_cast<Eigen::Index>(d);
            for (long i = 0; i < counts[d]; ++i) {
                c[d] = lower[col] + static_cast<double>(i) * step;
                const double lb_d = lb + coordinate_bound(c[d]);
                if (lb_d >= best_value_)
                    continue;
                partial[d + 1].noalias() = partial[d] + c[d] * problem_.op.col(col);
                if (d + 1 < n_)
                    self(self, d + 1, lb_d);
                else
                    visit(c, lb_d, partial[n_]);
            }
        };
        recurse(recurse, 0, 0.0);
    }

    // Halves every kept cube along each axis.
    void refine()
    {
        std::vector<Cell> parents(cells_.begin(), cells_.end());
        cells_.clear();
        half_ *= 0.5;
        Point c{};
        for (const Cell& parent : parents) {
            if (parent.lower_bound >= best_value_)
                continue;
            for (unsigned corner = 0; corner < (1u << n_); ++corner) {
                double lb = 0.0;
                for (std::size_t d = 0; d < n_; ++d) {
                    c[d] = parent.centre[d] + ((corner & (1u << d)) ? half_ : -half_);
                    lb += coordinate_bound(c[d]);
                }
                if (lb < best_value_)
                    visit(c, lb, residual(c));
            }
        }
    }

    bool found_feasible() const { return std::isfinite(best_value_); }
    const Vector& best_point() const { return found_feasible() ? best_x_ : closest_x_; }
    bool exhausted() const { return cells_.empty(); }

private:
    double coordinate_bound(double v) const
    {
        const double gap = std::abs(v) - half_;
        return gap <= 0.0 ? 0.0 : std::pow(gap, problem_.p);
    }

    double estimate(const Point& c, double lb, const Vector& r, double disc) const
    {
        double value = 0.0;
        for (std::size_t d = 0; d < n_; ++d)
            value += c[d] == 0.0 ? 0.0 : std::pow(std::abs(c[d]), problem_.p);
        const double excess = disc - limit_;
        if (excess <= 0.0)
            return value;
        double gg = 0.0;
        double slope = 0.0;
        for (std::size_t d = 0; d < n_; ++d) {
            const double g = problem_.op.col(static_cast<Eigen::Index>(d)).dot(r) / disc;
            const double a = std::abs(c[d]);
            const double dr = a == 0.0 ? 0.0 : problem_.p * std::pow(a, problem_.p - 1.0) * (c[d] > 0 ? 1.0 : -1.0);
            gg += g * g;
            slope -= dr * g;
        }
        if (gg == 0.0)
            return lb;
        return std::max(lb, value + excess * slope / gg);
    }

    Vector residual(const Point& c) const
    {
        Vector r = -problem_.data;
        for (std::size_t d = 0; d < n_; ++d)
            r.noalias() += c[d] * problem_.op.col(static_cast<Eigen::Index>(d));
        return r;
    }

    void offer_point(const Point& c, double disc)
    {
        if (disc > limit_) {
            if (!found_feasible() && disc < closest_disc_) {
                closest_disc_ = disc;
                for (std::size_t d = 0; d < n_; ++d)
                    closest_x_[static_cast<Eigen::Index>(d)] = c[d];
            }
            return;
        }
        double value = 0.0;
        for (std::size_t d = 0; d < n_; ++d)
            value += c[d] == 0.0 ? 0.0 : std::pow(std::abs(c[d]), problem_.p);
        Vector x(static_cast<Eigen::Index>(n_));
        for (std::size_t d = 0; d < n_; ++d)
            x[static_cast<Eigen::Index>(d)] = c[d];
        if (value < best_value_ || (value == best_value_ && lexicographically_less(x, best_x_))) {
            best_value_ = value;
            best_x_ = std::move(x);
        }
    }

    void visit(const Point& c, double lb, const Vector& r)
    {
        const double disc = r.norm();
        if (closest_x_.size() == 0)
            closest_x_ = Vector::Zero(static_cast<Eigen::Index>(n_));
        offer_point(c, disc);
        // Points of the cube with some coordinates set exactly to zero; for p < 1
        // these can be far better than the centre.
        unsigned near_zero = 0;
        for (std::size_t d = 0; d < n_; ++d)
            if (c[d] != 0.0 && std::abs(c[d]) <= half_)
                near_zero |= 1u << d;
        for (unsigned mask = near_zero; mask != 0; mask = (mask - 1) & near_zero) {
            Point z = c;
            for (std::size_t d = 0; d < n_; ++d)
                if (mask & (1u << d))
                    z[d] = 0.0;
            offer_point(z, residual(z).norm());
        }
        const double reach = opnorm_ * half_ * std::sqrt(static_cast<double>(n_));
        if (disc - reach > limit_ || lb >= best_value_)
            return;
        cells_.insert({estimate(c, lb, r, disc), lb, c});
        if (cells_.size() > capacity_)
            cells_.erase(std::prev(cells_.end()));
    }

    static bool lexicographically_less(const Vector& a, const Vector& b)
    {
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (a[i] != b[i])
                return a[i] < b[i];
        return false;
    }

    const Problem& problem_;
    std::size_t n_;
    double limit_;
    std::size_t capacity_;
    double opnorm_ = 0.0;
    double half_ = 0.0;
    std::set<Cell> cells_;
    double best_value_ = std::numeric_limits<double>::infinity();
    Vector best_x_;
    double closest_disc_ = std::numeric_limits<double>::infinity();
    Vector closest_x_;
};

SolveReport to_report(const Problem& problem, const Vector& x, bool feasible)
{
    SolveReport r;
    r.x = x;
    r.objective = regularizer_value(x, problem.p);
    r.discrepancy = discrepancy(problem, x);
    if (!feasible)
        r.status = SolveStatus::Infeasible;
    else if (r.objective == 0.0)
        r.status = SolveStatus::ZeroFeasible;
    else
        r.status = SolveStatus::ConstraintActive;
    return r;
}

} // namespace

Box default_box(const Problem& problem)
{
    const Vector ls = problem.op.completeOrthogonalDecomposition().solve(problem.data);
    const double half = 2.0 * (ls.lpNorm<Eigen::Infinity>() + 1.0);
    return {Vector::Constant(problem.cols(), -half), Vector::Constant(problem.cols(), half)};
}

SolveReport grid_search_solve(const Problem& problem, const GridOptions& opts)
{
    return grid_search_solve(problem, default_box(problem), opts);
}

SolveReport grid_search_solve(const Problem& problem, const Box& box, const GridOptions& opts)
{
    problem.validate();
    const Eigen::Index n = problem.cols();
    if (n > 3)
        throw SizeError("grid search supports at most 3 unknowns, got " + std::to_string(n));
    if (box.lower.size() != n || box.upper.size() != n)
        throw InvalidInput("box dimension does not match the problem");
    if (!(opts.resolution > 0.0) || opts.refinements < 0)
        throw InvalidInput("grid resolution must be > 0 and refinements >= 0");

    // The grid is aligned to multiples of the resolution so that 0 is a grid value.
    const double step = opts.resolution;
    Vector lower(n);
    std::vector<long> counts(static_cast<std::size_t>(n));
    double total = 1.0;
    for (Eigen::Index d = 0; d < n; ++d) {
        if (!(box.upper[d] >= box.lower[d]))
            throw InvalidInput("box upper bound below lower bound");
        const double first = std::ceil(box.lower[d] / step - 1e-9);
        const double last = std::floor(box.upper[d] / step + 1e-9);
        const double c = std::max(last - first + 1.0, 1.0);
        total *= c;
        if (total > kMaxGridPoints)
            throw SizeError("grid would exceed " + std::to_string(static_cast<long>(kMaxGridPoints)) + " points");
        lower[d] = last >= first ? first * step : 0.5 * (box.lower[d] + box.upper[d]);
        counts[static_cast<std::size_t>(d)] = static_cast<long>(c);
    }

    const auto capacity = static_cast<std::size_t>(kLevelBudget) >> n;
    CellSearch search(problem, capacity);
    search.scan_grid(lower, step, counts);
    // Each x10 refinement pass is carried out as repeated halving.
    const int halvings = static_cast<int>(std::ceil(opts.refinements * std::log2(10.0) - 1e-9));
    for (int level = 0; level < halvings && !search.exhausted(); ++level)
        search.refine();
    return to_report(problem, search.best_point(), search.found_feasible());
}

SolveReport support_enumeration_solve(const Problem& problem, int max_support, const GridOptions& opts)
{
    problem.validate();
    const Eigen::Index n = problem.cols();
    if (n > 12)
        throw SizeError("support enumeration supports at most 12 unknowns");
    if (max_support < 0 || max_support > 3)
        throw SizeError("max_support must lie in [0, 3]");

    const double limit = problem.beta + default_feasibility_tolerance(problem);
    SolveReport best;
    best.x = Vector::Zero(n);
    best.objective = std::numeric_limits<double>::infinity();
    best.discrepancy = problem.data.norm();
    best.status = SolveStatus::Infeasible;
    if (best.discrepancy <= limit) {
        best.objective = 0.0;
        best.status = SolveStatus::ZeroFeasible;
        return best;
    }

    std::vector<Eigen::Index> support;
    auto visit = [&](const std::vector<Eigen::Index>& supp) {
        Problem sub{Matrix(problem.rows(), static_cast<Eigen::Index>(supp.size())), problem.data, problem.beta,
                    problem.p};
        for (std::size_t j = 0; j < supp.size(); ++j)
            sub.op.col(static_cast<Eigen::Index>(j)) = problem.op.col(supp[j]);
        const SolveReport r = grid_search_solve(sub, opts);
        if (r.status == SolveStatus::Infeasible || !(r.objective < best.objective))
            return;
        Vector full = Vector::Zero(n);
        for (std::size_t j = 0; j < supp.size(); ++j)
            full[supp[j]] = r.x[static_cast<Eigen::Index>(j)];
        best.x = full;
        best.objective = r.objective;
        best.discrepancy = discrepancy(problem, full);
        best.status = r.status;
    };
    // Supports in order of size, then lexicographically.
    auto enumerate = [&](auto&& self, Eigen::Index first, int remaining) -> void {
        if (remaining == 0) {
            visit(support);
            return;
        }
        for (Eigen::Index i = first; i < n; ++i) {
            support.push_back(i);
            self(self, i + 1, remaining - 1);
            support.pop_back();
        }
    };
    for (int size = 1; size <= max_support; ++size)
        enumerate(enumerate, 0, size);
    if (best.status == SolveStatus::Infeasible)
        best.objective = regularizer_value(best.x, problem.p);
    return best;
}

} // namespace resmeth::oracle
