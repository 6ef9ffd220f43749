#pragma once

#include "resmeth/core.hpp"

namespace resmeth::oracle {

struct Box {
    Vector lower;
    Vector upper;
};

struct GridOptions {
    double resolution = 1e-3;
    /// Each pass shrinks the spacing by 10 inside every cell that may still hold
    /// a better feasible point.
    int refinements = 2;
};

/// Largest number of grid points one exhaustive scan may visit.
inline constexpr double kMaxGridPoints = 1e8;

/// [-B, B]^n with B = 2 (||x_ls||_inf + 1).
Box default_box(const Problem& problem);

/// Exhaustive scan of the box for min R_p subject to the discrepancy bound,
/// followed by branch and bound refinement. Only for n <= 3. Returns
/// Infeasible, with the point of smallest discrepancy, when no feasible grid
/// point is found.
SolveReport grid_search_solve(const Problem& problem, const Box& box, const GridOptions& opts = {});
SolveReport grid_search_solve(const Problem& problem, const GridOptions& opts = {});

/// Enumerates every support of size <= max_support (n <= 12, max_support <= 3)
/// and grid-searches the restricted problem; returns the global best.
SolveReport support_enumeration_solve(const Problem& problem, int max_support, const GridOptions& opts = {});

} // namespace resmeth::oracle
