#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ratemap/gridmap.hpp"

namespace ratemap {

struct PlanConfig {
    double a = 0.025;        // movement penalty per cell
    double epsilon = 0.501;  // feasibility threshold
    bool eight_connected = false;
};

// Cost of traversing a cell with projected value x_tilde on a d-cell map:
// x_tilde + a when feasible (x_tilde <= epsilon), d * (epsilon + a) otherwise.
double cell_cost(double x_tilde, const PlanConfig& cfg, int d);

// A* over the grid, summing cell_cost over every vertex on the path
// including start and goal. Heuristic a * Manhattan(p, goal); ties broken
// by (f, h, row, col) so the result is deterministic. Always returns a
// path: infeasible cells carry a large finite cost.
std::vector<Cell> plan(const Eigen::VectorXd& x_tilde, int rows, int cols,
                       Cell start, Cell goal, const PlanConfig& cfg);

// Total vertex cost of a path (used for oracles and metrics).
double path_cost(const std::vector<Cell>& path, const Eigen::VectorXd& x_tilde,
                 int cols, const PlanConfig& cfg, int d);

}  // namespace ratemap
