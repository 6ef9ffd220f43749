#include "resmeth/errors.hpp"
#include "resmeth/oracle.hpp"
#include "resmeth/solvers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace resmeth;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

double prox_objective(double u, double v, double t, double p)
{
    return 0.5 * (u - v) * (u - v) + t * std::pow(std::abs(u), p);
}

// Independent reference values (cvxpy/Clarabel, tolerances 1e-11).
struct FrozenCase {
    const char* name;
    Matrix op;
    Vector y;
    double beta;
    double p;
    double objective;
};

std::vector<FrozenCase> frozen_cases()
{
    Matrix a(2, 3);
    a << 1, 2, 0, 0, 1, -1;
    Matrix b(3, 2);
    b << 2, -1, 1, 1, 0, 3;
    Matrix c(4, 6);
    c << 1, 0.5, -0.3, 0, 2, 1, 0, 1, 0.2, -1, 0.5, 0, 0.3, 0, 1, 0.4, 0, -0.7, -0.5, 0.2, 0, 1, 0.1, 0.3;
    const Vector ya = vec({1, 2});
    const Vector yb = vec({1, 0, 2});
    const Vector yc = vec({1, -0.5, 0.8, 0.2});
    return {
        {"A1", a, ya, 0.5, 1.0, 1.5},
        {"A15", a, ya, 0.5, 1.5, 1.3454918548667014},
        {"A2", a, ya, 0.5, 2.0, 1.19529621927563},
        {"B1", b, yb, 1.5, 1.0, 0.5},
        {"B15", b, yb, 1.5, 1.5, 0.2577438969355656},
        {"B2", b, yb, 1.5, 2.0, 0.1331566495818693},
        {"C1", c, yc, 0.2, 1.0, 1.585674319673021},
        {"C15", c, yc, 0.2, 1.5, 1.0528945763444022},
        {"C2", c, yc, 0.2, 2.0, 0.6507298283374731},
    };
}

} // namespace

TEST(SolverOptions, Validation)
{
    SolverOptions o;
    EXPECT_NO_THROW(o.validate());
    o.restarts = 0;
    EXPECT_THROW(o.validate(), InvalidInput);
    o = SolverOptions{};
    o.inner_tolerance = 0.0;
    EXPECT_THROW(o.validate(), InvalidInput);
}

TEST(Prox, Examples)
{
    EXPECT_DOUBLE_EQ(prox_lp_scalar(3.0, 1.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(prox_lp_scalar(1.0, 0.5, 2.0), 0.5);
    EXPECT_EQ(prox_lp_scalar(0.1, 1.0, 0.5), 0.0);
    // Grid-scan references (step 1e-5 on [-5, 5]).
    EXPECT_NEAR(prox_lp_scalar(1.3, 0.4, 1.5), 0.77261, 2e-5);
    EXPECT_NEAR(prox_lp_scalar(2.0, 0.3, 0.5), 1.89092, 2e-5);
    EXPECT_NEAR(prox_lp_scalar(-0.7, 0.25, 1.2), -0.44487, 2e-5);
}

TEST(Prox, Vectorized)
{
    const Vector out = prox_lp(vec({3, -3, 0.5}), 1.0, 1.0);
    EXPECT_EQ(out, vec({2, -2, 0}));
    EXPECT_THROW(prox_lp(vec({1}), 1.0, 3.0), InvalidInput);
    EXPECT_THROW(prox_lp(vec({1}), 0.0, 1.0), InvalidInput);
}

TEST(Prox, NoGridPointBeatsIt)
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> v_dist(-4.0, 4.0);
    std::uniform_real_distribution<double> t_dist(0.01, 2.0);
    std::uniform_real_distribution<double> p_dist(0.1, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double v = v_dist(rng);
        const double t = t_dist(rng);
        const double p = p_dist(rng);
        const double u = prox_lp_scalar(v, t, p);
        const double f = prox_objective(u, v, t, p);
        double best = f;
        for (int i = -5000; i <= 5000; ++i)
            best = std::min(best, prox_objective(i * 1e-3, v, t, p));
        EXPECT_LE(f, best + 1e-8) << "v=" << v << " t=" << t << " p=" << p;
    }
}

TEST(Tikhonov, ScalarExamples)
{
    const Matrix one = Matrix::Identity(1, 1);
    SolverOptions o;
    EXPECT_NEAR(tikhonov_min(one, vec({2}), 1.0, 2.0, o).x[0], 1.0, 1e-12);
    EXPECT_NEAR(tikhonov_min(one, vec({2}), 2.0, 1.0, o).x[0], 1.0, 1e-8);
    const auto r = tikhonov_min(one, vec({2}), 2.0, 1.0, o);
    EXPECT_EQ(r.status, SolveStatus::InteriorMinimum);
    EXPECT_EQ(r.alpha, 2.0);
}

TEST(Tikhonov, HugeAlphaGivesZero)
{
    Matrix op(2, 3);
    op << 1, 2, 3, -1, 0, 2;
    for (double p : {1.0, 1.5, 2.0})
        EXPECT_LT(tikhonov_min(op, vec({1, 4}), 1e12, p, {}).x.lpNorm<Eigen::Infinity>(), 1e-6) << p;
    EXPECT_LT(tikhonov_min(op, vec({1, 4}), 1e12, 0.5, {}, Vector::Zero(3)).x.lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(ResidualMethod, RidgeExample)
{
    Problem pr{Matrix::Identity(2, 2), vec({2, 0}), 1.0, 2.0};
    const auto r = residual_method_solve(pr);
    EXPECT_EQ(r.status, SolveStatus::ConstraintActive);
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], 0.0, 1e-12);
    EXPECT_NEAR(r.objective, 1.0, 2e-6);
    EXPECT_NEAR(r.discrepancy, 1.0, 1e-6);
    ASSERT_TRUE(r.alpha.has_value());
}

TEST(ResidualMethod, LassoExample)
{
    Problem pr{Matrix::Identity(2, 2), vec({2, 0.5}), 1.0, 1.0};
    const auto r = residual_method_solve(pr);
    EXPECT_NEAR(r.x[0], 2.0 - std::sqrt(0.75), 1e-6);
    EXPECT_NEAR(r.x[1], 0.0, 1e-9);
}

TEST(ResidualMethod, ZeroFeasible)
{
    Matrix op(2, 3);
    op << 1, 2, 3, 4, 5, 6;
    for (double p : {0.5, 1.0, 2.0}) {
        const auto r = residual_method_solve({op, vec({0.3, 0.4}), 0.5, p});
        EXPECT_EQ(r.status, SolveStatus::ZeroFeasible);
        EXPECT_EQ(r.x, Vector::Zero(3));
        EXPECT_EQ(r.objective, 0.0);
    }
}

TEST(ResidualMethod, InfeasibleBelowLeastSquaresResidual)
{
    Matrix op(2, 1);
    op << 1, 0;
    for (double p : {0.5, 1.0, 2.0}) {
        const auto r = residual_method_solve({op, vec({3, 1}), 0.5, p});
        EXPECT_EQ(r.status, SolveStatus::Infeasible) << p;
    }
}

TEST(ResidualMethod, RadiusAtLeastSquaresResidual)
{
    // r_ls = 1; the feasible set is the line {x : x1 + x2 = 3}.
    Matrix op(2, 2);
    op << 1, 1, 0, 0;
    const auto r2 = residual_method_solve({op, vec({3, 1}), 1.0, 2.0});
    EXPECT_NEAR(r2.x[0], 1.5, 1e-6);
    EXPECT_NEAR(r2.x[1], 1.5, 1e-6);
    const auto r1 = residual_method_solve({op, vec({3, 1}), 1.0, 1.0});
    EXPECT_NEAR(r1.objective, 3.0, 1e-6);
    EXPECT_LE(r1.discrepancy, 1.0 + 1e-6);
}

TEST(ResidualMethod, ZeroRadiusExactSystem)
{
    Matrix op(1, 2);
    op << 1, 2;
    const auto r = residual_method_solve({op, vec({5}), 0.0, 2.0});
    EXPECT_NE(r.status, SolveStatus::Infeasible);
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], 2.0, 1e-6);
}

TEST(ResidualMethod, MatchesFrozenReferenceValues)
{
    for (const FrozenCase& c : frozen_cases()) {
        const auto r = residual_method_solve({c.op, c.y, c.beta, c.p});
        EXPECT_NEAR(r.objective, c.objective, 1e-5) << c.name;
        EXPECT_LE(r.discrepancy, c.beta * (1 + 1e-6) + 1e-9) << c.name;
    }
}

TEST(ResidualMethod, FeasibilityMorozovAndObjectiveInvariants)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    const double ps[] = {1.0, 1.3, 1.5, 2.0};
    SolverOptions opts;
    for (int seed = 0; seed < 60; ++seed) {
        Matrix op(5, 8);
        for (Eigen::Index i = 0; i < op.size(); ++i)
            op.data()[i] = normal(rng);
        Vector y(5);
        for (auto& v : y)
            v = normal(rng);
        const Problem pr{op, y, 0.3 * y.norm(), ps[seed % 4]};
        const auto r = residual_method_solve(pr, opts);
        ASSERT_EQ(r.status, SolveStatus::ConstraintActive) << seed;
        EXPECT_LE(r.discrepancy, pr.beta * (1 + 1e-6) + 1e-9);
        EXPECT_LE(std::abs(r.discrepancy - pr.beta), opts.discrepancy_match_tolerance * pr.beta);
        const double recomputed = regularizer_value(r.x, pr.p);
        EXPECT_NEAR(r.objective, recomputed, 1e-12 * std::max(1.0, recomputed));
        EXPECT_NEAR(r.discrepancy, discrepancy(pr, r.x), 1e-12);
    }
}

TEST(ResidualMethod, PathDiscrepancyIncreasesWithAlpha)
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    for (int seed = 0; seed < 30; ++seed) {
        Matrix op(4, 6);
        for (Eigen::Index i = 0; i < op.size(); ++i)
            op.data()[i] = normal(rng);
        Vector y(4);
        for (auto& v : y)
            v = normal(rng);
        const double p = seed % 2 ? 1.0 : 1.5;
        auto path = residual_method_solve({op, y, 0.4 * y.norm(), p}).path;
        ASSERT_GE(path.size(), 2u);
        std::sort(path.begin(), path.end(), [](const PathPoint& a, const PathPoint& b) { return a.alpha < b.alpha; });
        for (std::size_t i = 1; i < path.size(); ++i)
            EXPECT_GE(path[i].discrepancy, path[i - 1].discrepancy - 1e-8 * (1 + path[i].discrepancy))
                << "seed " << seed;
    }
}

TEST(ResidualMethod, DeterministicGivenSeed)
{
    Matrix op(3, 5);
    op << 1, 0.2, -0.4, 0.5, 0, 0.3, 1, 0, -0.2, 0.6, 0, 0.1, 1, 0.7, -0.3;
    const Problem pr{op, vec({1, -1, 0.5}), 0.2, 0.5};
    SolverOptions o;
    o.rng_seed = 42;
    const auto a = residual_method_solve(pr, o);
    const auto b = residual_method_solve(pr, o);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.objective, b.objective);
}

TEST(Nonconvex, SeparableExample)
{
    const auto r = nonconvex_solve({Matrix::Identity(2, 2), vec({2, 0}), 1.0, 0.5});
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], 0.0, 1e-9);
    EXPECT_NEAR(r.objective, 1.0, 1e-6);
    EXPECT_GE(r.restarts_used, 1);
}

TEST(Nonconvex, ZeroFeasibleAndExponentCheck)
{
    const auto r = nonconvex_solve({Matrix::Identity(2, 2), vec({0.5, 0}), 1.0, 0.5});
    EXPECT_EQ(r.status, SolveStatus::ZeroFeasible);
    EXPECT_THROW(nonconvex_solve({Matrix::Identity(2, 2), vec({2, 0}), 1.0, 1.5}), InvalidInput);
}

TEST(Nonconvex, FrozenOneSparseOptimum)
{
    // Global optimum from an exact 1-sparse boundary root and a 2-sparse grid scan.
    Matrix op(3, 3);
    op << 1, 0.2, 0, 0, 1, 0.3, 0.1, 0, 1;
    const auto r = nonconvex_solve({op, vec({1, 0, 0.05}), 0.2, 0.5});
    EXPECT_LE(r.objective, 0.8957107784736896 + 1e-6);
    EXPECT_NEAR(r.x[0], 0.802297798673943, 1e-5);
}

TEST(Nonconvex, NotWorseThanSupportEnumeration)
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal;
    SolverOptions opts;
    opts.discrepancy_match_tolerance = 1e-10;
    for (int seed = 0; seed < 10; ++seed) {
        Matrix op(8, 12);
        for (Eigen::Index i = 0; i < op.size(); ++i)
            op.data()[i] = normal(rng);
        Vector truth = Vector::Zero(12);
        truth[seed % 12] = 1.5;
        truth[(seed * 5 + 3) % 12] = -0.8;
        const Problem pr{op, op * truth, 1e-3, 0.5};
        opts.rng_seed = static_cast<std::uint64_t>(seed);
        const auto r = nonconvex_solve(pr, opts);
        const auto o = oracle::support_enumeration_solve(pr, 2, {1e-2, 5});
        EXPECT_LE(r.objective, o.objective + 1e-6) << "seed " << seed;
    }
}
