// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "resmeth/oracle.hpp"
#include "resmeth/rates.hpp"
#include "resmeth/solvers.hpp"
#include "resmeth/stability.hpp"
#include "resmeth/transport.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace resmeth;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix gaussian(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> g(0.0, scale);
    Matrix a(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i)
            a(i, j) = g(rng);
    return a;
}

double spectral_norm(const Matrix& a)
{
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

// ---- rates -----------------------------------------------------------------

struct Sweep {
    rates::RateInstance instance;
    rates::RateTable table;
    double seconds;
};

Sweep sweep(double p, Eigen::Index sparsity, Eigen::Index m, Eigen::Index n)
{
    const auto t0 = std::chrono::steady_clock::now();
    rates::RateInstanceSpec spec;
    spec.m = m;
    spec.n = n;
    spec.p = p;
    spec.sparsity = sparsity;
    spec.rng_seed = 1;
    Sweep s{rates::build_rate_instance(spec), {}, 0.0};
    rates::RateExperimentOptions opts;
    opts.beta_grid = rates::geometric_grid(1e-4, 1e-1, 9);
    opts.seeds_per_beta = 10;
    s.table = rates::run_rate_experiment(s.instance, opts);
    s.seconds = seconds_since(t0);
    return s;
}

bool within(double v, double target, double band)
{
    return std::abs(v - target) <= band;
}

Outcome rate_sparse_l1()
{
    const Sweep s = sweep(1.0, 5, 64, 128);
    const rates::SlopeFit f = rates::fit_loglog_slope(s.table, rates::RateColumn::ErrL2);
    const bool ok = within(f.slope, 1.0, 0.15) && f.r_squared >= 0.95 && s.seconds <= 120.0;
    return {ok, fmt("l2 slope %.4f (1 +- 0.15), r2 %.4f, %.1f s", f.slope, f.r_squared, s.seconds)};
}

Outcome rate_dense_p15()
{
    const Sweep s = sweep(1.5, 0, 64, 128);
    const rates::SlopeFit l2 = rates::fit_loglog_slope(s.table, rates::RateColumn::ErrL2);
    const rates::SlopeFit lp = rates::fit_loglog_slope(s.table, rates::RateColumn::ErrLp);
    const bool ok = within(l2.slope, 0.5, 0.15) && within(lp.slope, 0.5, 0.15);
    return {ok, fmt("l2 slope %.4f, lp slope %.4f (0.5 +- 0.15), r2 %.4f", l2.slope, lp.slope, l2.r_squared)};
}

Outcome rate_sparse_p15()
{
    const Sweep s = sweep(1.5, 5, 64, 128);
    const rates::SlopeFit f = rates::fit_loglog_slope(s.table, rates::RateColumn::ErrL2);
    return {within(f.slope, 1.0 / 1.5, 0.15), fmt("l2 slope %.4f (0.667 +- 0.15), r2 %.4f", f.slope, f.r_squared)};
}

Outcome rate_sparse_p05()
{
    const Sweep s = sweep(0.5, 3, 32, 64);
    const rates::SlopeFit f = rates::fit_loglog_slope(s.table, rates::RateColumn::ErrL2);
    return {within(f.slope, 1.0, 0.2), fmt("l2 slope %.4f (1 +- 0.2), r2 %.4f, %.1f s", f.slope, f.r_squared, s.seconds)};
}

Outcome source_bound()
{
    std::size_t rows = 0, bad = 0;
    double worst = -INFINITY;
    for (std::uint64_t seed : {1, 2, 3}) {
        rates::RateInstanceSpec spec;
        spec.p = 2.0;
        spec.sparsity = 0;
        spec.rng_seed = seed;
        const rates::RateInstance inst = rates::build_rate_instance(spec);
        rates::RateExperimentOptions opts;
        opts.beta_grid = rates::geometric_grid(1e-4, 1e-1, 9);
        opts.seeds_per_beta = 10;
        opts.base_seed = seed;
        const rates::RateTable t = rates::run_rate_experiment(inst, opts);
        const double w = inst.certificate->omega.norm();
        for (const rates::RateRow& r : t.rows) {
            const double excess = r.err_l2 * r.err_l2 - w * (r.beta + r.noise);
            worst = std::max(worst, excess);
            bad += excess > 1e-8;
            ++rows;
        }
        bad += t.diagnostics.size();
    }
    return {bad == 0 && rows == 270, fmt("%.0f rows, %.0f violations, max err^2 - bound %.3e", static_cast<double>(rows),
                                         static_cast<double>(bad), worst)};
}

// ---- stability -------------------------------------------------------------

double bisection_root(double delta)
{
    double lo = 1.0, hi = 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid * mid * mid - mid * mid - delta > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome counterexample()
{
    const stability::InstabilityReport r = stability::instability_demo(1.0, {0.1, 0.01, 0.001});
    const double x0 = r.rows[0].x, x01 = r.rows[1].x, x0001 = r.rows[3].x;
    const double root = bisection_root(0.1);
    const bool ok = std::abs(x0) <= 1e-3 && x0001 >= 0.99 && r.jump >= 0.98 && std::abs(x01 - root) <= 1e-3;
    return {ok, fmt("x(0) %.3g, x(1e-3) %.6f, jump %.6f, |x(0.1) - root| %.2e", x0, x0001, r.jump,
                    std::abs(x01 - root))};
}

Outcome value_continuity()
{
    std::vector<double> eps;
    for (double e = 0.5; e >= 0.9e-6; e /= std::sqrt(10.0))
        eps.push_back(e);
    eps.push_back(1e-6);
    double mono = -INFINITY, gap = 0.0;
    for (int s = 0; s < 20; ++s) {
        std::mt19937_64 rng(100 + s);
        const Matrix F = gaussian(6, 10, rng);
        const Vector y = gaussian(6, 1, rng);
        const double p = s % 3 == 0 ? 1.0 : (s % 3 == 1 ? 1.5 : 2.0);
        const stability::ValueContinuityReport r =
            stability::check_value_right_continuity(F, y, p, 0.4 * y.norm(), eps);
        mono = std::max(mono, r.monotonicity_excess);
        gap = std::max(gap, r.sup_gap);
    }
    return {mono <= 1e-8 && gap <= 1e-3, fmt("max v(b+e) - v(b) %.2e, max v(b) - v(b+1e-6) %.2e", mono, gap)};
}

Outcome stability_suite()
{
    double finest = 0.0, zero = 0.0;
    const std::vector<int> ks = stability::default_schedule(64);
    for (int s = 0; s < 10; ++s) {
        std::mt19937_64 rng(s);
        const Matrix F = gaussian(8, 12, rng);
        const Vector y = gaussian(8, 1, rng);
        const Vector e = gaussian(8, 1, rng).normalized();
        Matrix E = gaussian(8, 12, rng);
        E /= spectral_norm(E);
        const Problem problem{F, y, 0.3 * y.norm(), s % 2 ? 1.5 : 2.0};
        const auto data = stability::run_data_stability(
            problem, stability::data_schedule(problem, 0.1 * y.norm() * e, ks));
        const auto still = stability::run_data_stability(problem, stability::data_schedule(problem, 0 * e, ks));
        const auto op = stability::run_operator_stability(
            problem, stability::operator_schedule(F, 0.1 * spectral_norm(F) * E, ks), {}, ks);
        for (const auto* r : {&data.rows.back(), &op.rows.back()})
            finest = std::max({finest, r->norm_gap, r->r_gap});
        for (const auto& r : still.rows)
            zero = std::max({zero, r.norm_gap, r.r_gap, r.value_gap});
        if (std::isnan(finest))
            return {false, "infeasible perturbed problem"};
    }
    return {finest <= 1e-2 && zero <= 1e-6, fmt("finest-level max gap %.3e, zero-perturbation max gap %.3e", finest, zero)};
}

// ---- oracle equivalence ----------------------------------------------------

Outcome oracle_equivalence()
{
    const double ps[3] = {1.0, 1.5, 2.0};
    int convex_pass = 0;
    double convex_worst = 0.0;
    SolverOptions tight;
    tight.discrepancy_match_tolerance = 1e-10;
    tight.inner_tolerance = 1e-14;
    tight.max_inner_iterations = 200000;
    tight.max_outer_bisections = 200;
    for (int seed = 0; seed < 200; ++seed) {
        std::mt19937_64 rng(5000 + seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int n = 1 + seed % 3, m = 1 + (seed / 3) % 4;
        const Matrix F = gaussian(m, n, rng);
        const Vector y = gaussian(m, 1, rng);
        const Vector xls = F.completeOrthogonalDecomposition().solve(y);
        const double floor = (F * xls - y).norm();
        const Problem problem{F, y, floor + (0.05 + 0.9 * u(rng)) * (y.norm() - floor), ps[(seed / 12) % 3]};
        const SolveReport r = residual_method_solve(problem, tight);
        const oracle::Box box = oracle::default_box(problem);
        const double width = (box.upper - box.lower).maxCoeff();
        const SolveReport q = oracle::grid_search_solve(problem, box, {std::max(0.05, width / 400.0), 6});
        const double d = std::abs(r.objective - q.objective);
        convex_worst = std::max(convex_worst, d);
        convex_pass += d <= 1e-5;
    }

    int nc_pass = 0, nc_better = 0;
    std::string misses;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const int m = 5 + seed % 4, n = 10, s = 1 + seed % 2;
        const Matrix F = gaussian(m, n, rng) / std::sqrt(static_cast<double>(m));
        Vector x = Vector::Zero(n);
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i)
            idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int k = 0; k < s; ++k)
            x[idx[k]] = (u(rng) < 0.5 ? -1 : 1) * (0.5 + 1.5 * u(rng));
        const Vector e = gaussian(m, 1, rng).normalized();
        Vector y = F * x;
        const double beta = std::pow(10.0, -3.0 + 2.0 * u(rng)) * y.norm();
        y += 0.5 * beta * e;
        const Problem problem{F, y, beta, 0.5};
        SolverOptions opts;
        opts.discrepancy_match_tolerance = 1e-10;
        opts.rng_seed = static_cast<std::uint64_t>(seed);
        const SolveReport r = nonconvex_solve(problem, opts);
        const SolveReport q = oracle::support_enumeration_solve(problem, 2, {1e-2, 5});
        const bool ok = std::abs(r.objective - q.objective) <= 1e-6;
        nc_pass += ok;
        nc_better += r.objective < q.objective - 1e-6;
        if (!ok)
            misses += fmt(" [seed %.0f: solver %.9f, oracle %.9f]", seed, r.objective, q.objective);
    }
    const bool ok = convex_pass == 200 && nc_pass >= 95 && nc_better == 0;
    return {ok, fmt("convex %.0f/200 (worst %.2e), non-convex %.0f/100, solver below oracle %.0f", convex_pass,
                    convex_worst, nc_pass, nc_better) +
                    misses};
}

// ---- transport -------------------------------------------------------------

Outcome wasserstein_exactness()
{
    using namespace transport;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double dev = 0.0;
    for (int c = 0; c < 500; ++c) {
        const int k = 1 + c % 6;
        std::vector<double> a(k), b(k);
        for (double& v : a)
            v = u(rng);
        for (double& v : b)
            v = u(rng);
        for (double p : {1.0, 2.0})
            dev = std::max(dev, std::abs(wasserstein_discrete(empirical_measure(a), empirical_measure(b), p) -
                                         wasserstein_oracle_permutation(a, b, p)));
    }
    auto random_measure = [&](int k) {
        std::vector<double> atoms(k), weights(k);
        for (int i = 0; i < k; ++i) {
            atoms[i] = u(rng);
            weights[i] = 1.1 + u(rng);
        }
        double total = 0.0;
        for (double w : weights)
            total += w;
        for (double& w : weights)
            w /= total;
        return make_measure(atoms, weights);
    };
    const std::vector<double> lambdas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double violation = 0.0;
    for (int t = 0; t < 200; ++t) {
        const DiscreteMeasure a = random_measure(1 + t % 5), b = random_measure(2 + t % 4), c = random_measure(1 + t % 7);
        for (double p : {1.0, 2.0})
            violation = std::max(violation, wp_convexity_check(a, b, c, p, lambdas).max_violation);
    }
    return {dev <= 1e-12 && violation <= 1e-10,
            fmt("max deviation from permutation oracle %.2e, max convexity violation %.2e", dev, violation)};
}

Outcome density_consistency()
{
    using namespace transport;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> medians;
    for (int k : {100, 1000, 10000}) {
        // Radius: twice the median distance between the empirical measure and the truth.
        std::vector<double> w;
        for (int s = 0; s < 10; ++s)
            w.push_back(w1_to_triangular(sample_triangular(k, s)));
        std::sort(w.begin(), w.end());
        const double beta = w[4] + w[5];
        std::vector<double> errs;
        for (int s = 0; s < 10; ++s)
            errs.push_back(l1_error_triangular(density_estimate(sample_triangular(k, s), beta, 0, 1, 200).density));
        std::sort(errs.begin(), errs.end());
        medians.push_back(0.5 * (errs[4] + errs[5]));
    }
    const double secs = seconds_since(t0);
    const bool ok = medians[0] > medians[1] && medians[1] > medians[2] && secs <= 300.0;
    return {ok, fmt("median L1 %.4f -> %.4f -> %.4f, %.1f s", medians[0], medians[1], medians[2], secs)};
}

// ---- determinism -----------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome cli_determinism()
{
    const fs::path dir = fs::temp_directory_path() / "resmeth_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto file = [&](const std::string& name) { return (dir / name).string(); };
    std::ofstream(file("F.csv")) << "1,2,0,0.5\n0,1,-1,0.2\n0.3,0,1,1\n";
    std::ofstream(file("y.csv")) << "1\n2\n-0.5\n";
    std::ofstream(file("solve.cfg")) << "operator = " << file("F.csv") << "\ndata = " << file("y.csv")
                                     << "\nbeta = 0.4\np = 0.5\nseed = 9\n";
    {
        std::ofstream samples(file("samples.csv"));
        for (double v : transport::sample_triangular(300, 4))
            samples << fmt("%.17g", v) << "\n";
    }
    const std::string tool = RESMETH_TOOL;
    const std::string common = " --operator " + file("F.csv") + " --data " + file("y.csv") + " --beta 0.4 --p 1.5";
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
        {"solve " + file("solve.cfg") + " --out {}/solve.json", {"solve.json"}},
        {"rates --p 1 --sparsity 2 --m 12 --n 24 --num-beta 4 --seeds 3 --seed 11 --out {}/rates.csv",
         {"rates.csv", "rates.summary.json"}},
        {"rates --p 0.5 --sparsity 2 --m 12 --n 24 --num-beta 3 --seeds 2 --seed 11 --out {}/nc.csv",
         {"nc.csv", "nc.summary.json"}},
        {"stability data" + common + " --seed 3 --out {}/data.csv", {"data.csv"}},
        {"stability operator" + common + " --seed 3 --out {}/op.csv", {"op.csv"}},
        {"stability value" + common + " --out {}/value.csv --summary {}/value.json", {"value.csv", "value.json"}},
        {"stability counterexample --deltas 0.1,0.01 --out {}/cex.csv --summary {}/cex.json", {"cex.csv", "cex.json"}},
        {"density --samples " + file("samples.csv") + " --cells 50 --out {}/d.csv --summary {}/d.json",
         {"d.csv", "d.json"}},
    };
    int identical = 0;
    std::string failures;
    for (const auto& [args, outputs] : commands) {
        std::vector<std::string> runs[2];
        bool ran = true;
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path run_dir = dir / ("run" + std::to_string(rep));
            fs::remove_all(run_dir);
            fs::create_directories(run_dir);
            std::string line = args;
            for (std::size_t at; (at = line.find("{}")) != std::string::npos;)
                line.replace(at, 2, run_dir.string());
            ran = ran && std::system((tool + " " + line + " > " + (run_dir / "stdout").string()).c_str()) == 0;
            for (const std::string& o : outputs)
                runs[rep].push_back(fs::exists(run_dir / o) ? slurp(run_dir / o) : std::string("\x01missing"));
        }
        const bool same = ran && runs[0] == runs[1];
        identical += same;
        if (!same)
            failures += " [" + args.substr(0, args.find(' ', 11)) + "]";
    }
    fs::remove_all(dir);
    return {identical == static_cast<int>(commands.size()),
            fmt("%.0f/%.0f commands byte-identical across two runs", identical, static_cast<double>(commands.size())) +
                failures};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"rate, sparse p=1", rate_sparse_l1},
        {"rate, dense p=1.5", rate_dense_p15},
        {"rate, sparse p=1.5", rate_sparse_p15},
        {"rate, sparse p=0.5", rate_sparse_p05},
        {"source-condition error bound, p=2", source_bound},
        {"counterexample jump", counterexample},
        {"value right-continuity", value_continuity},
        {"stability under data and operator perturbations", stability_suite},
        {"oracle equivalence", oracle_equivalence},
        {"Wasserstein exactness and convexity", wasserstein_exactness},
        {"density consistency", density_consistency},
        {"CLI determinism", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %2zu %s: %s  (%s; %.1f s)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
