#include "resmeth/value_function.hpp"
#include "resmeth/errors.hpp"

#include <exception>
#include <limits>

namespace resmeth {

std::vector<ValuePoint> value_function(const Matrix& op, const Vector& data, double p,
                                       const std::vector<double>& beta_grid, const SolverOptions& opts)
{
    for (std::size_t i = 0; i < beta_grid.size(); ++i) {
        if (!(beta_grid[i] >= 0.0))
            throw InvalidInput("beta grid entries must be >= 0");
        if (i > 0 && beta_grid[i] < beta_grid[i - 1])
            throw InvalidInput("beta grid must be ascending");
    }
    std::vector<ValuePoint> out;
    out.reserve(beta_grid.size());
    for (double beta : beta_grid) {
        try {
            const SolveReport r = residual_method_solve(Problem{op, data, beta, p}, opts);
            const double v = r.status == SolveStatus::Infeasible ? std::numeric_limits<double>::infinity()
                                                                   : r.objective;
            out.push_back({beta, v, r.status});
        } catch (const std::exception&) {
            out.push_back({beta, std::numeric_limits<double>::infinity(), SolveStatus::Infeasible});
        }
    }
    return out;
}

} // namespace resmeth
