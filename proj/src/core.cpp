#include "resmeth/core.hpp"
#include "resmeth/errors.hpp"

#include <cmath>
#include <string>

namespace resmeth {

void check_exponent(double p)
{
    if (!(p > 0.0 && p <= 2.0))
        throw InvalidInput("exponent p must lie in (0, 2], got " + std::to_string(p));
}

void check_finite(const Vector& v, std::string_view what)
{
    if (!v.allFinite())
        throw InvalidInput(std::string(what) + " has non-finite entries");
}

void check_finite(const Matrix& m, std::string_view what)
{
    if (!m.allFinite())
        throw InvalidInput(std::string(what) + " has non-finite entries");
}

void Problem::validate() const
{
    if (op.rows() < 1 || op.cols() < 1)
        throw InvalidInput("operator must have at least one row and one column");
    if (op.rows() > kMaxDimension || op.cols() > kMaxDimension)
        throw InvalidInput("operator exceeds the supported dimension");
    if (data.size() != op.rows())
        throw InvalidInput("data length " + std::to_string(data.size()) +
                           " does not match operator rows " + std::to_string(op.rows()));
    check_finite(op, "operator");
    check_finite(data, "data");
    if (!(std::isfinite(beta) && beta >= 0.0))
        throw InvalidInput("beta must be finite and nonnegative");
    check_exponent(p);
}

std::string_view to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::ConstraintActive: return "ConstraintActive";
    case SolveStatus::InteriorMinimum: return "InteriorMinimum";
    case SolveStatus::ZeroFeasible: return "ZeroFeasible";
    case SolveStatus::Infeasible: return "Infeasible";
    }
    return "Unknown";
}

double regularizer_value(const Vector& x, double p)
{
    check_exponent(p);
    check_finite(x, "x");
    if (p == 2.0)
        return x.squaredNorm();
    if (p == 1.0)
        return x.lpNorm<1>();
    double sum = 0.0;
    for (double v : x)
        if (v != 0.0)
            sum += std::pow(std::abs(v), p);
    return sum;
}

double discrepancy(const Problem& problem, const Vector& x)
{
    if (x.size() != problem.cols() || problem.data.size() != problem.rows())
        throw InvalidInput("dimension mismatch in discrepancy");
    return (problem.op * x - problem.data).norm();
}

bool feasible(const Problem& problem, const Vector& x, double tol)
{
    return discrepancy(problem, x) <= problem.beta + tol;
}

double default_feasibility_tolerance(const Problem& problem)
{
    return 1e-9 * std::max(1.0, problem.data.norm());
}

} // namespace resmeth
