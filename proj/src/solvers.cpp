#include "resmeth/solvers.hpp"
#include "resmeth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace resmeth {

void SolverOptions::validate() const
{
    if (max_outer_bisections < 1 || max_inner_iterations < 1 || restarts < 1)
        throw InvalidInput("solver iteration counts must be >= 1");
    if (!(inner_tolerance > 0.0) || !(discrepancy_match_tolerance > 0.0))
        throw InvalidInput("solver tolerances must be > 0");
}

namespace {

// Root of u + t p u^(p-1) = a on (0, a] for 1 < p < 2.
double prox_power_convex(double a, double t, double p)
{
    if (p == 1.5) {
        const double s = 0.5 * (-1.5 * t + std::sqrt(2.25 * t * t + 4.0 * a));
        return s * s;
    }
    double lo = 0.0;
    double hi = a;
    double u = std::min(a, std::pow(a / (t * p), 1.0 / (p - 1.0)));
    for (int i = 0; i < 200; ++i) {
        if (!(u > 0.0)) {
            u = 0.5 * (lo + hi);
            continue;
        }
        const double up = std::pow(u, p - 1.0);
        const double phi = u + t * p * up - a;
        if (phi == 0.0)
            return u;
        if (phi > 0.0)
            hi = u;
        else
            lo = u;
        double next = u - phi / (1.0 + t * p * (p - 1.0) * up / u);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - u) <= 4.0 * std::numeric_limits<double>::epsilon() * next ||
            hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
            return next;
        u = next;
    }
    return u;
}

// Global minimizer of 0.5 (u - a)^2 + t u^p over u >= 0 for 0 < p < 1, a >= 0.
double prox_power_nonconvex(double a, double t, double p)
{
    // u + t p u^(p-1) is convex on (0, inf) with its minimum at u_min.
    const double u_min = std::pow(t * p * (1.0 - p), 1.0 / (2.0 - p));
    const double g_min = u_min + t * p * std::pow(u_min, p - 1.0);
    if (a <= g_min)
        return 0.0;
    // Newton from the right stays to the right of the larger root.
    double u = a;
    for (int i = 0; i < 200; ++i) {
        const double f = u + t * p * std::pow(u, p - 1.0) - a;
        const double df = 1.0 - t * p * (1.0 - p) * std::pow(u, p - 2.0);
        double next = u - f / df;
        next = std::clamp(next, u_min, u);
        if (std::abs(next - u) <= 4.0 * std::numeric_limits<double>::epsilon() * u) {
            u = next;
            break;
        }
        u = next;
    }
    const double h_root = 0.5 * (u - a) * (u - a) + t * std::pow(u, p);
    const double h_zero = 0.5 * a * a;
    return h_root < h_zero ? u : 0.0;
}

double sign_of(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

// Inner Tikhonov solver bound to one (F, y, p). p = 2 uses the SVD closed form,
// other exponents run proximal gradient with a cached Lipschitz constant.
class TikhonovSolver {
public:
    TikhonovSolver(const Matrix& op, const Vector& data, double p, const SolverOptions& opts)
        : op_(op), data_(data), p_(p), opts_(opts)
    {
        if (p_ == 2.0) {
            svd_.compute(op_, Eigen::ComputeThinU | Eigen::ComputeThinV);
            projected_ = svd_.matrixU().transpose() * data_;
        } else {
            lipschitz_ = 2.0 * largest_eigenvalue_gram(op_);
        }
    }

    int iterations() const { return iterations_; }
    bool converged() const { return converged_; }

    Vector solve(double alpha, const Vector& start)
    {
        if (p_ == 2.0)
            return ridge(alpha);
        if (!(lipschitz_ > 0.0))
            return Vector::Zero(op_.cols());
        return p_ >= 1.0 ? fista(alpha, start) : ista(alpha, start);
    }

    double discrepancy(const Vector& x) const { return (op_ * x - data_).norm(); }

private:
    Vector ridge(double alpha)
    {
        const Vector& s = svd_.singularValues();
        Vector coeff(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i)
            coeff[i] = s[i] * projected_[i] / (s[i] * s[i] + alpha);
        ++iterations_;
        return svd_.matrixV() * coeff;
    }

    Vector gradient(const Vector& x) const { return 2.0 * (op_.transpose() * (op_ * x - data_)); }

    bool small_change(const Vector& diff, const Vector& x) const
    {
        return diff.norm() <= opts_.inner_tolerance * x.norm();
    }

    Vector fista(double alpha, const Vector& start)
    {
        const double step = 1.0 / lipschitz_;
        Vector x = start;
        Vector z = x;
        double momentum = 1.0;
        bool done = false;
        int k = 0;
        for (; k < opts_.max_inner_iterations && !done; ++k) {
            Vector next = prox_lp(z - step * gradient(z), alpha * step, p_);
            const Vector diff = next - x;
            done = small_change(diff, next);
            if ((z - next).dot(diff) > 0.0) {
                momentum = 1.0;
                z = next;
            } else {
                const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
                z = next + ((momentum - 1.0) / m_next) * diff;
                momentum = m_next;
            }
            x = std::move(next);
        }
        iterations_ += k;
        converged_ = converged_ && done;
        return x;
    }

    Vector ista(double alpha, const Vector& start)
    {
        const double step = 1.0 / lipschitz_;
        Vector x = start;
        bool done = false;
        int k = 0;
        for (; k < opts_.max_inner_iterations && !done; ++k) {
            Vector next = prox_lp(x - step * gradient(x), alpha * step, p_);
            done = small_change(next - x, next);
            x = std::move(next);
        }
        iterations_ += k;
        converged_ = converged_ && done;
        return x;
    }

    const Matrix& op_;
    const Vector& data_;
    double p_;
    const SolverOptions& opts_;
    double lipschitz_ = 0.0;
    Eigen::BDCSVD<Matrix> svd_;
    Vector projected_;
    int iterations_ = 0;
    bool converged_ = true;
};

struct Sample {
    double log_alpha = 0.0;
    Vector x;
    double discrepancy = 0.0;
};

struct MorozovOutcome {
    Sample sample;
    bool matched = false;
    bool bracketed = true;
};

// Searches log(alpha) so that the Tikhonov minimizer's discrepancy matches beta.
// The bracket is expanded by decades from alpha = 1 and then narrowed by
// regula falsi (Illinois variant) on log(d / beta), falling back to bisection.
// Every visited sample is passed to `visit`.
template <class Visit>
MorozovOutcome morozov_search(TikhonovSolver& solver, double beta, const Vector& start,
                              const SolverOptions& opts, std::vector<PathPoint>& path, Visit&& visit)
{
    constexpr int kMaxExpansions = 40;
    const double ln10 = std::log(10.0);
    const double tol = opts.discrepancy_match_tolerance * beta;

    auto eval = [&](double log_alpha, const Vector& from) {
        Sample s;
        s.log_alpha = log_alpha;
        s.x = solver.solve(std::exp(log_alpha), from);
        s.discrepancy = solver.discrepancy(s.x);
        path.push_back({std::exp(log_alpha), s.discrepancy});
        visit(s);
        return s;
    };
    auto matched = [&](const Sample& s) { return std::abs(s.discrepancy - beta) <= tol; };

    Sample s = eval(0.0, start);
    if (matched(s))
        return {std::move(s), true};

    Sample lo;
    Sample hi;
    bool have_lo = false;
    bool have_hi = false;
    if (s.discrepancy < beta) {
        lo = std::move(s);
        have_lo = true;
        for (int i = 0; i < kMaxExpansions && !have_hi; ++i) {
            Sample t = eval(lo.log_alpha + ln10, lo.x);
            if (matched(t))
                return {std::move(t), true};
            if (t.discrepancy > beta) {
                hi = std::move(t);
                have_hi = true;
            } else {
                lo = std::move(t);
            }
        }
    } else {
        hi = std::move(s);
        have_hi = true;
        for (int i = 0; i < kMaxExpansions && !have_lo; ++i) {
            Sample t = eval(hi.log_alpha - ln10, hi.x);
            if (matched(t))
                return {std::move(t), true};
            if (t.discrepancy < beta) {
                lo = std::move(t);
                have_lo = true;
            } else {
                hi = std::move(t);
            }
        }
    }
    if (!have_lo)
        return {std::move(hi), false, false};
    if (!have_hi)
        return {std::move(lo), false, false};

    auto phi = [&](const Sample& t) {
        return t.discrepancy > 0.0 ? std::log(t.discrepancy / beta) : -std::numeric_limits<double>::infinity();
    };
    double f_lo = phi(lo);
    double f_hi = phi(hi);
    int side = 0;
    for (int it = 0; it < opts.max_outer_bisections; ++it) {
        const double width = hi.log_alpha - lo.log_alpha;
        if (width <= 1e-13 * std::max(1.0, std::abs(lo.log_alpha)))
            break;
        double next = 0.5 * (lo.log_alpha + hi.log_alpha);
        if (std::isfinite(f_lo)) {
            const double secant = lo.log_alpha - f_lo * width / (f_hi - f_lo);
            if (secant > lo.log_alpha + 1e-3 * width && secant < hi.log_alpha - 1e-3 * width)
                next = secant;
        }
        const bool from_lo = next - lo.log_alpha < hi.log_alpha - next;
        Sample t = eval(next, from_lo ? lo.x : hi.x);
        if (matched(t))
            return {std::move(t), true};
        if (t.discrepancy < beta) {
            lo = std::move(t);
            f_lo = phi(lo);
            if (side == -1)
                f_hi *= 0.5;
            side = -1;
        } else {
            hi = std::move(t);
            f_hi = phi(hi);
            if (side == 1)
                f_lo *= 0.5;
            side = 1;
        }
    }
    return {std::move(lo), false};
}

// Minimizes R_p over {x : F x = target} by Douglas-Rachford splitting between
// the prox of R_p and the affine projection. Convex p converges to the global
// minimizer; p < 1 yields a heuristic point.
Vector minimize_on_affine_set(const Matrix& op, const Vector& target, double p, const SolverOptions& opts,
                              const Vector& start, int& iterations, bool& converged)
{
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(op);
    auto project = [&](const Vector& z) -> Vector { return z - cod.solve(op * z - target); };
    constexpr double gamma = 1.0;
    Vector z = start;
    Vector x = project(z);
    bool done = false;
    int k = 0;
    for (; k < opts.max_inner_iterations && !done; ++k) {
        const Vector w = prox_lp(2.0 * x - z, gamma, p);
        z += w - x;
        Vector next = project(z);
        done = (next - x).norm() <= opts.inner_tolerance * next.norm();
        x = std::move(next);
    }
    iterations += k;
    converged = converged && done;
    return x;
}

SolveReport make_report(const Problem& problem, Vector x, SolveStatus status)
{
    SolveReport r;
    r.objective = regularizer_value(x, problem.p);
    r.discrepancy = discrepancy(problem, x);
    r.x = std::move(x);
    r.status = status;
    return r;
}

struct Preflight {
    std::optional<SolveReport> early;
    Vector least_squares;
    double ls_residual = 0.0;
    bool at_ls_residual = false;
};

// Handles the zero-feasible and infeasible cases shared by both solvers.
Preflight preflight(const Problem& problem, const SolverOptions& opts)
{
    Preflight pre;
    const double feas_tol = default_feasibility_tolerance(problem);
    if (problem.data.norm() <= problem.beta) {
        pre.early = make_report(problem, Vector::Zero(problem.cols()), SolveStatus::ZeroFeasible);
        return pre;
    }
    pre.least_squares = problem.op.completeOrthogonalDecomposition().solve(problem.data);
    pre.ls_residual = discrepancy(problem, pre.least_squares);
    if (pre.ls_residual > problem.beta + feas_tol) {
        pre.early = make_report(problem, pre.least_squares, SolveStatus::Infeasible);
        return pre;
    }
    pre.at_ls_residual =
        problem.beta - pre.ls_residual <= opts.discrepancy_match_tolerance * problem.beta + feas_tol;
    return pre;
}

SolveReport solve_on_ls_set(const Problem& problem, const Preflight& pre, const SolverOptions& opts)
{
    int iterations = 0;
    bool converged = true;
    const Vector target = problem.op * pre.least_squares;
    Vector x = minimize_on_affine_set(problem.op, target, problem.p, opts, pre.least_squares, iterations,
                                      converged);
    SolveReport r = make_report(problem, std::move(x), SolveStatus::ConstraintActive);
    r.iterations = iterations;
    r.converged = converged;
    return r;
}

bool lexicographically_less(const Vector& a, const Vector& b)
{
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<Eigen::Index> support_of(const Vector& x)
{
    std::vector<Eigen::Index> supp;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] != 0.0)
            supp.push_back(i);
    return supp;
}

Matrix columns_of(const Matrix& op, const std::vector<Eigen::Index>& supp)
{
    Matrix sub(op.rows(), static_cast<Eigen::Index>(supp.size()));
    for (std::size_t j = 0; j < supp.size(); ++j)
        sub.col(static_cast<Eigen::Index>(j)) = op.col(supp[j]);
    return sub;
}

// Majorize-minimize refinement for 0 < p < 1 on the support of `x`.
//
// Each step replaces (z^2 + eps^2)^(p/2) by its quadratic majorizer at the
// current iterate, which turns the constrained problem into a weighted ridge
// residual problem solved exactly via the SVD path. The iterates stay on the
// constraint boundary. Coordinates that collapse towards zero are pruned and
// the refinement restarts on the smaller support.
// Orthogonal matching pursuit: least-squares fits on greedily grown supports,
// stopping one atom after the residual first drops below the radius.
std::vector<Vector> greedy_starts(const Problem& problem)
{
    std::vector<Vector> out;
    std::vector<Eigen::Index> supp;
    Vector residual = problem.data;
    const Eigen::Index limit = std::min(problem.rows(), problem.cols());
    int after_feasible = -1;
    while (static_cast<Eigen::Index>(supp.size()) < limit && after_feasible < 1) {
        Eigen::Index pick = -1;
        double score = 0.0;
        for (Eigen::Index j = 0; j < problem.cols(); ++j) {
            if (std::find(supp.begin(), supp.end(), j) != supp.end())
                continue;
            const double norm = problem.op.col(j).norm();
            if (norm == 0.0)
                continue;
            const double c = std::abs(problem.op.col(j).dot(residual)) / norm;
            if (c > score) {
                score = c;
                pick = j;
            }
        }
        if (pick < 0)
            break;
        supp.push_back(pick);
        const Matrix sub = columns_of(problem.op, supp);
        const Vector z = sub.colPivHouseholderQr().solve(problem.data);
        Vector x = Vector::Zero(problem.cols());
        for (std::size_t j = 0; j < supp.size(); ++j)
            x[supp[j]] = z[static_cast<Eigen::Index>(j)];
        residual = problem.data - sub * z;
        out.push_back(std::move(x));
        if (after_feasible >= 0 || residual.norm() <= problem.beta)
            ++after_feasible;
    }
    return out;
}

Vector boundary_refine(const Problem& problem, Vector x, const SolverOptions& opts, int& iterations)
{
    constexpr int kMaxSteps = 400;
    constexpr int kMaxPruneRounds = 16;
    SolverOptions ridge_opts = opts;
    ridge_opts.discrepancy_match_tolerance = std::max(1e-3 * opts.discrepancy_match_tolerance, 1e-13);
    const double p = problem.p;

    for (int round = 0; round < kMaxPruneRounds; ++round) {
        const std::vector<Eigen::Index> supp = support_of(x);
        if (supp.empty())
            break;
        const Matrix sub = columns_of(problem.op, supp);
        Vector z(static_cast<Eigen::Index>(supp.size()));
        for (std::size_t j = 0; j < supp.size(); ++j)
            z[static_cast<Eigen::Index>(j)] = x[supp[j]];
        const double eps = 1e-10 * z.lpNorm<Eigen::Infinity>();
        bool feasible_support = true;
        for (int step = 0; step < kMaxSteps; ++step) {
            const Vector scale = (z.array().square() + eps * eps).pow((2.0 - p) / 4.0).matrix();
            const Matrix weighted = sub * scale.asDiagonal();
            TikhonovSolver ridge(weighted, problem.data, 2.0, ridge_opts);
            std::vector<PathPoint> scratch;
            MorozovOutcome out = morozov_search(ridge, problem.beta, Vector::Zero(z.size()), ridge_opts,
                                                scratch, [](const Sample&) {});
            ++iterations;
            if (!out.bracketed) {
                feasible_support = false;
                break;
            }
            Vector next = scale.cwiseProduct(out.sample.x);
            const bool done = (next - z).norm() <= opts.inner_tolerance * next.norm();
            z = std::move(next);
            if (done)
                break;
        }
        if (!feasible_support)
            break;
        Vector candidate = Vector::Zero(x.size());
        for (std::size_t j = 0; j < supp.size(); ++j)
            candidate[supp[j]] = z[static_cast<Eigen::Index>(j)];
        const double cutoff = 1e-7 * z.lpNorm<Eigen::Infinity>();
        bool pruned = false;
        for (Eigen::Index i = 0; i < candidate.size(); ++i) {
            if (candidate[i] != 0.0 && std::abs(candidate[i]) <= cutoff) {
                candidate[i] = 0.0;
                pruned = true;
            }
        }
        x = std::move(candidate);
        if (!pruned)
            return x;
    }
    return x;
}

} // namespace

double prox_lp_scalar(double v, double t, double p)
{
    check_exponent(p);
    if (!(t > 0.0))
        throw InvalidInput("prox parameter t must be > 0");
    const double a = std::abs(v);
    if (a == 0.0)
        return 0.0;
    if (p == 2.0)
        return v / (1.0 + 2.0 * t);
    if (p == 1.0)
        return sign_of(v) * std::max(a - t, 0.0);
    if (p > 1.0)
        return sign_of(v) * prox_power_convex(a, t, p);
    return sign_of(v) * prox_power_nonconvex(a, t, p);
}

Vector prox_lp(const Vector& v, double t, double p)
{
    check_exponent(p);
    if (!(t > 0.0))
        throw InvalidInput("prox parameter t must be > 0");
    Vector out(v.size());
    if (p == 2.0) {
        out = v / (1.0 + 2.0 * t);
        return out;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[i] = prox_lp_scalar(v[i], t, p);
    return out;
}

double largest_eigenvalue_gram(const Matrix& op)
{
    if (op.size() == 0)
        return 0.0;
    Vector v = Vector::Ones(op.cols()) / std::sqrt(static_cast<double>(op.cols()));
    // Deterministic perturbation so that v is unlikely to be orthogonal to the top eigenvector.
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] += 1e-3 * std::sin(static_cast<double>(i + 1));
    v.normalize();
    double lambda = 0.0;
    for (int k = 0; k < 1000; ++k) {
        Vector w = op.transpose() * (op * v);
        const double next = w.norm();
        if (next == 0.0)
            return 0.0;
        v = w / next;
        const bool done = std::abs(next - lambda) <= 1e-12 * next;
        lambda = next;
        if (done)
            break;
    }
    // Power iteration approaches from below; a small margin keeps 1/L a safe step.
    return lambda * (1.0 + 1e-6);
}

SolveReport tikhonov_min(const Matrix& op, const Vector& data, double alpha, double p,
                         const SolverOptions& opts)
{
    return tikhonov_min(op, data, alpha, p, opts, Vector::Zero(op.cols()));
}

SolveReport tikhonov_min(const Matrix& op, const Vector& data, double alpha, double p,
                         const SolverOptions& opts, const Vector& start)
{
    check_exponent(p);
    opts.validate();
    if (!(alpha > 0.0))
        throw InvalidInput("alpha must be > 0");
    if (data.size() != op.rows() || start.size() != op.cols())
        throw InvalidInput("dimension mismatch in tikhonov_min");
    TikhonovSolver solver(op, data, p, opts);
    Vector x = solver.solve(alpha, start);
    SolveReport r;
    r.objective = regularizer_value(x, p);
    r.discrepancy = solver.discrepancy(x);
    r.x = std::move(x);
    r.alpha = alpha;
    r.status = SolveStatus::InteriorMinimum;
    r.iterations = solver.iterations();
    r.converged = solver.converged();
    return r;
}

SolveReport residual_method_solve(const Problem& problem, const SolverOptions& opts)
{
    problem.validate();
    opts.validate();
    if (problem.p < 1.0)
        return nonconvex_solve(problem, opts);

    const Preflight pre = preflight(problem, opts);
    if (pre.early)
        return *pre.early;
    if (pre.at_ls_residual)
        return solve_on_ls_set(problem, pre, opts);

    TikhonovSolver solver(problem.op, problem.data, problem.p, opts);
    std::vector<PathPoint> path;
    MorozovOutcome out =
        morozov_search(solver, problem.beta, Vector::Zero(problem.cols()), opts, path, [](const Sample&) {});
    if (!out.bracketed && out.sample.discrepancy > problem.beta) {
        // Even alpha = 1e-40 leaves the discrepancy above beta: the radius sits at the
        // least-squares residual for all practical purposes.
        SolveReport r = solve_on_ls_set(problem, pre, opts);
        r.iterations += solver.iterations();
        r.path = std::move(path);
        return r;
    }
    SolveReport r = make_report(problem, std::move(out.sample.x),
                                out.bracketed ? SolveStatus::ConstraintActive : SolveStatus::InteriorMinimum);
    r.alpha = std::exp(out.sample.log_alpha);
    r.iterations = solver.iterations();
    r.converged = solver.converged() && out.matched;
    r.path = std::move(path);
    return r;
}

SolveReport nonconvex_solve(const Problem& problem, const SolverOptions& opts)
{
    problem.validate();
    opts.validate();
    if (!(problem.p > 0.0 && problem.p < 1.0))
        throw UnsupportedExponent("nonconvex_solve requires 0 < p < 1");

    const Preflight pre = preflight(problem, opts);
    if (pre.early)
        return *pre.early;

    const Eigen::Index n = problem.cols();
    const double accept = problem.beta * (1.0 + opts.discrepancy_match_tolerance) +
                          default_feasibility_tolerance(problem);

    struct Best {
        Vector x;
        double objective = std::numeric_limits<double>::infinity();
        std::optional<double> alpha;
    } best;
    int iterations = 0;
    bool converged = true;
    std::vector<PathPoint> path;

    auto offer = [&](const Vector& x, std::optional<double> alpha) {
        if (discrepancy(problem, x) > accept)
            return;
        const double obj = regularizer_value(x, problem.p);
        const double tie = 1e-12 * std::max(1.0, std::abs(best.objective));
        if (!std::isfinite(best.objective) || obj < best.objective - tie ||
            (std::abs(obj - best.objective) <= tie && lexicographically_less(x, best.x))) {
            best.x = x;
            best.objective = obj;
            best.alpha = alpha;
        }
    };

    if (pre.at_ls_residual) {
        SolveReport r = solve_on_ls_set(problem, pre, opts);
        r.restarts_used = 1;
        return r;
    }

    // Start points: least squares, the p = 1 solution, then alternating small
    // perturbations of zero and random sparse vectors.
    std::mt19937_64 rng(opts.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = std::max(pre.least_squares.lpNorm<Eigen::Infinity>(), 1e-12);
    std::vector<Vector> starts;
    starts.push_back(pre.least_squares);
    if (opts.restarts > 1) {
        Problem convex = problem;
        convex.p = 1.0;
        SolveReport l1 = residual_method_solve(convex, opts);
        iterations += l1.iterations;
        starts.push_back(l1.x);
    }
    const Eigen::Index support =
        std::clamp<Eigen::Index>(problem.rows() / 4, 1, std::max<Eigen::Index>(1, n));
    for (int r = 2; r < opts.restarts; ++r) {
        Vector s = Vector::Zero(n);
        if (r % 2 == 0) {
            for (Eigen::Index i = 0; i < n; ++i)
                s[i] = 1e-3 * scale * normal(rng);
        } else {
            std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
            std::iota(idx.begin(), idx.end(), Eigen::Index{0});
            std::shuffle(idx.begin(), idx.end(), rng);
            for (Eigen::Index j = 0; j < support; ++j)
                s[idx[static_cast<std::size_t>(j)]] = scale * normal(rng);
        }
        starts.push_back(std::move(s));
    }

    // Each start runs a Tikhonov continuation path; the best feasible point of
    // that path is then pushed onto the constraint boundary by boundary_refine,
    // since global prox steps for p < 1 can jump over the boundary.
    TikhonovSolver solver(problem.op, problem.data, problem.p, opts);
    int refine_steps = 0;
    for (const Vector& start : starts) {
        Vector local;
        double local_obj = std::numeric_limits<double>::infinity();
        auto consider = [&](const Vector& x, std::optional<double> alpha) {
            offer(x, alpha);
            if (discrepancy(problem, x) <= accept) {
                const double obj = regularizer_value(x, problem.p);
                if (obj < local_obj) {
                    local_obj = obj;
                    local = x;
                }
            }
        };
        consider(start, std::nullopt);
        morozov_search(solver, problem.beta, start, opts, path,
                       [&](const Sample& s) { consider(s.x, std::exp(s.log_alpha)); });
        if (std::isfinite(local_obj))
            offer(boundary_refine(problem, local, opts, refine_steps), std::nullopt);
    }
    // Reweighting started from the dense least-squares and l1 points and from
    // greedy supports finds sparse boundary points the continuation paths miss.
    for (std::size_t i = 0; i < std::min<std::size_t>(2, starts.size()); ++i)
        if (support_of(starts[i]).size() > 0)
            offer(boundary_refine(problem, starts[i], opts, refine_steps), std::nullopt);
    for (const Vector& g : greedy_starts(problem))
        offer(boundary_refine(problem, g, opts, refine_steps), std::nullopt);
    iterations += solver.iterations() + refine_steps;
    converged = solver.converged();

    if (!std::isfinite(best.objective)) {
        SolveReport r = make_report(problem, pre.least_squares, SolveStatus::Infeasible);
        r.iterations = iterations;
        r.restarts_used = static_cast<int>(starts.size());
        r.path = std::move(path);
        return r;
    }
    SolveReport r = make_report(problem, std::move(best.x), SolveStatus::ConstraintActive);
    r.alpha = best.alpha;
    r.iterations = iterations;
    r.converged = converged && std::abs(r.discrepancy - problem.beta) <=
                                   opts.discrepancy_match_tolerance * problem.beta;
    r.restarts_used = static_cast<int>(starts.size());
    r.path = std::move(path);
    return r;
}

} // namespace resmeth
