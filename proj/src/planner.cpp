#include "ratemap/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace ratemap {

double cell_cost(double x_tilde, const PlanConfig& cfg, int d) {
    if (x_tilde <= cfg.epsilon) return x_tilde + cfg.a;
    return d * (cfg.epsilon + cfg.a);
}

double path_cost(const std::vector<Cell>& path, const Eigen::VectorXd& x_tilde,
                 int cols, const PlanConfig& cfg, int d) {
    double total = 0.0;
    for (const Cell& c : path)
        total += cell_cost(x_tilde[c.row * cols + c.col], cfg, d);
    return total;
}

std::vector<Cell> plan(const Eigen::VectorXd& x_tilde, int rows, int cols,
                       Cell start, Cell goal, const PlanConfig& cfg) {
    const int d = rows * cols;
    if (x_tilde.size() != d) throw std::invalid_argument("plan: size mismatch");
    auto in_bounds = [&](Cell c) {
        return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols;
    };
    if (!in_bounds(start) || !in_bounds(goal))
        throw std::invalid_argument("plan: start or goal out of bounds");

    auto heuristic = [&](int r, int c) {
        return cfg.a * (std::abs(r - goal.row) + std::abs(c - goal.col));
    };

    // (f, h, row, col) ordering makes expansion and the returned path
    // deterministic for identical inputs.
    using Node = std::tuple<double, double, int, int>;
    std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
    std::vector<double> g(d, std::numeric_limits<double>::infinity());
    std::vector<int> parent(d, -1);
    std::vector<char> closed(d, 0);

    int s = start.row * cols + start.col;
    g[s] = cell_cost(x_tilde[s], cfg, d);
    open.emplace(g[s] + heuristic(start.row, start.col),
                 heuristic(start.row, start.col), start.row, start.col);

    static constexpr int dr4[] = {-1, 0, 0, 1};
    static constexpr int dc4[] = {0, -1, 1, 0};
    static constexpr int dr8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static constexpr int dc8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    const int* drs = cfg.eight_connected ? dr8 : dr4;
    const int* dcs = cfg.eight_connected ? dc8 : dc4;
    const int nnb = cfg.eight_connected ? 8 : 4;

    int goal_idx = goal.row * cols + goal.col;
    while (!open.empty()) {
        auto [f, h, r, c] = open.top();
        open.pop();
        int idx = r * cols + c;
        if (closed[idx]) continue;
        closed[idx] = 1;
        if (idx == goal_idx) break;
        for (int n = 0; n < nnb; ++n) {
            int nr = r + drs[n], nc = c + dcs[n];
            if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
            int nidx = nr * cols + nc;
            if (closed[nidx]) continue;
            double ng = g[idx] + cell_cost(x_tilde[nidx], cfg, d);
            if (ng < g[nidx]) {
                g[nidx] = ng;
                parent[nidx] = idx;
                double nh = heuristic(nr, nc);
                open.emplace(ng + nh, nh, nr, nc);
            }
        }
    }

    std::vector<Cell> path;
    for (int idx = goal_idx; idx != -1; idx = parent[idx])
        path.push_back({idx / cols, idx % cols});
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace ratemap
