#pragma once

#include "resmeth/core.hpp"
#include "resmeth/solvers.hpp"

#include <vector>

namespace resmeth {

struct ValuePoint {
    double beta;
    double value;
    SolveStatus status;
};

/// v(beta) = min { R_p(x) : ||F x - y|| <= beta } on an ascending grid of radii.
/// A cell whose solve fails is marked Infeasible with value +inf.
std::vector<ValuePoint> value_function(const Matrix& op, const Vector& data, double p,
                                       const std::vector<double>& beta_grid,
                                       const SolverOptions& opts = {});

} // namespace resmeth
