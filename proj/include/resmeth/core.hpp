#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <vector>

namespace resmeth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Largest operator dimension accepted anywhere in the library.
inline constexpr Eigen::Index kMaxDimension = 2048;

/// Constrained problem  min R_p(x)  subject to  ||F x - y|| <= beta.
///
/// The discrepancy is always measured in the plain Euclidean norm. A radius
/// given for the squared norm must be converted with std::sqrt before it is
/// stored here.
struct Problem {
    Matrix op;
    Vector data;
    double beta = 0.0;
    double p = 2.0;

    Eigen::Index rows() const { return op.rows(); }
    Eigen::Index cols() const { return op.cols(); }

    /// Throws InvalidInput if any invariant is broken.
    void validate() const;
};

enum class SolveStatus { ConstraintActive, InteriorMinimum, ZeroFeasible, Infeasible };

std::string_view to_string(SolveStatus s);

/// One visited point of a Tikhonov parameter search.
struct PathPoint {
    double alpha;
    double discrepancy;
};

struct SolveReport {
    Vector x;
    double objective = 0.0;
    double discrepancy = 0.0;
    std::optional<double> alpha;
    SolveStatus status = SolveStatus::Infeasible;
    int iterations = 0;
    int restarts_used = 0;
    // False when an inner iteration hit its cap before reaching tolerance.
    bool converged = true;
    std::vector<PathPoint> path;
};

/// sum_i |x_i|^p. Throws InvalidInput on non-finite entries or p outside (0, 2].
double regularizer_value(const Vector& x, double p);

/// ||F x - y||_2.
double discrepancy(const Problem& problem, const Vector& x);

bool feasible(const Problem& problem, const Vector& x, double tol);

/// 1e-9 * max(1, ||y||).
double default_feasibility_tolerance(const Problem& problem);

void check_exponent(double p);
void check_finite(const Vector& v, std::string_view what);
void check_finite(const Matrix& m, std::string_view what);

} // namespace resmeth
