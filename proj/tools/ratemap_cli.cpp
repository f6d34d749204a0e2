#include <CLI11.hpp>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <iostream>
#include <queue>
#include <random>
#include <sstream>

#include "ratemap/channel.hpp"
#include "ratemap/planner.hpp"
#include "ratemap/rdcomp.hpp"
#include "ratemap/sim.hpp"

using namespace ratemap;

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("RATEMAP_LOG");
    if (!env) return LogLevel::error;
    std::string v(env);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    return LogLevel::error;
}

void log(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(log_level()))
        std::cerr << msg << "\n";
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<double> tau;
    std::string strategy;
    std::optional<int> max_steps;
    std::vector<std::string> kv;
};

void add_common(CLI::App* cmd, std::string& config, std::string& out,
                Overrides& ov) {
    cmd->add_option("--config", config, "key=value config file")->required();
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", ov.seed, "session seed override");
    cmd->add_option("--alpha", ov.alpha, "distortion trade-off override");
    cmd->add_option("--tau", ov.tau, "rank pruning threshold override");
    cmd->add_option("--strategy", ov.strategy, "rd|fully_informed|uninformed");
    cmd->add_option("--max-steps", ov.max_steps, "step cap override");
    cmd->add_option("overrides", ov.kv, "extra key=value overrides");
}

SimConfig load_with_overrides(const std::string& config, const Overrides& ov) {
    SimConfig cfg = load_config(config);
    if (ov.seed) cfg.session_seed = *ov.seed;
    if (ov.alpha) cfg.alpha = *ov.alpha;
    if (ov.tau) cfg.tau = *ov.tau;
    if (!ov.strategy.empty()) apply_override(cfg, "strategy", ov.strategy);
    if (ov.max_steps) cfg.max_steps = *ov.max_steps;
    for (const std::string& kv : ov.kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("override must be key=value: " + kv);
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

GridMap load_checked(const SimConfig& cfg, bool full_scale) {
    GridMap map = load_map(cfg.map_path);
    if (!full_scale && (map.rows > 64 || map.cols > 64))
        throw std::runtime_error(
            "maps larger than 64x64 require --full-scale");
    return map;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged csv: " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty csv: " + path);
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

std::vector<double> parse_values(const std::string& s) {
    std::vector<double> vals;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.empty()) throw std::runtime_error("--values is empty");
    return vals;
}

// Oracle suite mirroring the unit-test cross-checks; returns failure count.
int verify_oracles() {
    int failures = 0;
    auto report = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "pass" : "FAIL") << "  " << name << "\n";
        if (!ok) ++failures;
    };

    {
        // Water-filling vs the scalar grid-search oracle per eigenvalue.
        std::mt19937_64 rng(101);
        std::normal_distribution<double> gauss;
        std::uniform_real_distribution<double> logalpha(std::log(1e-3),
                                                        std::log(10.0));
        bool ok = true;
        for (int trial = 0; trial < 200 && ok; ++trial) {
            int n = 1 + static_cast<int>(rng() % 8);
            Eigen::MatrixXd a(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
            Eigen::MatrixXd p = a * a.transpose();
            double alpha = std::exp(logalpha(rng));
            EffectiveWeight w{Eigen::MatrixXd::Identity(n, n)};
            RdSolution rd = reverse_water_filling(w, p, alpha);
            for (int i = 0; i < n; ++i) {
                double want = oracle_scalar_rd(rd.sigmas[i], alpha);
                if (std::abs(rd.phi[i] - want) >
                    1e-5 * std::max(1.0, std::abs(want)))
                    ok = false;
            }
        }
        report("water-filling matches per-eigenvalue grid search", ok);
    }
    {
        // Planner vs Dijkstra on random small maps.
        std::mt19937_64 rng(202);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        PlanConfig cfg;
        bool ok = true;
        for (int trial = 0; trial < 100 && ok; ++trial) {
            int rows = 2 + static_cast<int>(rng() % 7);
            int cols = 2 + static_cast<int>(rng() % 7);
            int n = rows * cols;
            Eigen::VectorXd x(n);
            for (int i = 0; i < n; ++i) x[i] = unif(rng);
            Cell start{static_cast<int>(rng() % rows),
                       static_cast<int>(rng() % cols)};
            Cell goal{static_cast<int>(rng() % rows),
                      static_cast<int>(rng() % cols)};
            auto path = plan(x, rows, cols, start, goal, cfg);
            double got = path_cost(path, x, cols, cfg, n);

            auto cost = [&](int i) { return cell_cost(x[i], cfg, n); };
            std::vector<double> dist(n, 1e300);
            using Item = std::pair<double, int>;
            std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
            int s = start.row * cols + start.col;
            dist[s] = cost(s);
            pq.emplace(dist[s], s);
            while (!pq.empty()) {
                auto [d, u] = pq.top();
                pq.pop();
                if (d > dist[u]) continue;
                int r = u / cols, c = u % cols;
                const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    int nr = r + dr[k], nc = c + dc[k];
                    if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
                    int v = nr * cols + nc;
                    if (d + cost(v) < dist[v]) {
                        dist[v] = d + cost(v);
                        pq.emplace(dist[v], v);
                    }
                }
            }
            if (std::abs(got - dist[goal.row * cols + goal.col]) > 1e-9)
                ok = false;
        }
        report("a* cost matches dijkstra", ok);
    }
    {
        // ECDQ noise moments.
        const int n = 100000;
        std::mt19937_64 rng(303);
        std::uniform_real_distribution<double> unif(-2.0, 2.0);
        Eigen::VectorXd o(n), deltas = Eigen::VectorXd::Ones(n);
        for (int i = 0; i < n; ++i) o[i] = unif(rng);
        DitherSpec spec{7, 0, deltas};
        Eigen::VectorXd eta = dither_sequence(spec);
        Eigen::VectorXd noise =
            reconstruct(quantize(o, deltas, eta), deltas, eta) - o;
        double mean = noise.mean();
        double var = (noise.array() - mean).square().sum() / (n - 1);
        bool ok = std::abs(mean) < 0.01 &&
                  std::abs(var - 1.0 / 12.0) < 0.05 / 12.0;
        report("ecdq noise moments", ok);
    }
    {
        // Entropy coder round trips.
        std::mt19937_64 rng(404);
        std::uniform_int_distribution<int> len(0, 20);
        std::uniform_int_distribution<int> val(-10000, 10000);
        bool ok = true;
        for (int trial = 0; trial < 10000 && ok; ++trial) {
            int n = len(rng);
            Eigen::VectorXi k(n);
            for (int i = 0; i < n; ++i) k[i] = val(rng);
            Eigen::VectorXi back = entropy_decode(entropy_code(k), n);
            if (n > 0 && (back - k).cwiseAbs().maxCoeff() != 0) ok = false;
        }
        report("entropy coder round trip", ok);
    }
    return failures;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"map-compression navigation simulator"};
    app.require_subcommand(1);
    bool full_scale = false;
    app.add_flag("--full-scale", full_scale,
                 "allow maps larger than 64x64");

    std::string cfg_seq, out_seq;
    Overrides ov_seq;
    auto* seq = app.add_subcommand("run-sequential",
                                   "run the two-agent sequential protocol");
    add_common(seq, cfg_seq, out_seq, ov_seq);

    std::string cfg_one, out_one;
    Overrides ov_one;
    auto* one =
        app.add_subcommand("run-oneshot", "run a single whole-map compression");
    add_common(one, cfg_one, out_one, ov_one);

    std::string elev_in, elev_out;
    auto* pre = app.add_subcommand(
        "preprocess-elevation",
        "convert an elevation csv to a traversability map");
    pre->add_option("input", elev_in, "elevation csv")->required();
    pre->add_option("--out", elev_out, "output map path (.csv or .pgm)")
        ->required();

    std::string cfg_sweep, out_sweep, values_str;
    Overrides ov_sweep;
    auto* sweep =
        app.add_subcommand("sweep-alpha", "rerun the config across alphas");
    add_common(sweep, cfg_sweep, out_sweep, ov_sweep);
    sweep->add_option("--values", values_str, "comma-separated alphas")
        ->required();

    auto* verify = app.add_subcommand("verify-oracles",
                                      "cross-check solvers against oracles");

    CLI11_PARSE(app, argc, argv);

    try {
        if (seq->parsed()) {
            SimConfig cfg = load_with_overrides(cfg_seq, ov_seq);
            GridMap map = load_checked(cfg, full_scale);
            log(LogLevel::info, "map " + cfg.map_path + " loaded, " +
                                    std::to_string(map.rows) + "x" +
                                    std::to_string(map.cols));
            RunResult res = run_sequential(cfg, map, out_seq);
            std::cout << "r_avg=" << res.metrics.r_avg
                      << " t_reach=" << res.metrics.t_reach
                      << " c_reach=" << res.metrics.c_reach
                      << " b_avg=" << res.metrics.b_avg
                      << " reached=" << (res.metrics.reached ? 1 : 0) << "\n";
        } else if (one->parsed()) {
            SimConfig cfg = load_with_overrides(cfg_one, ov_one);
            GridMap map = load_checked(cfg, full_scale);
            OneshotResult res = run_oneshot(cfg, map, out_one);
            std::cout << "alpha=" << cfg.alpha << " rank=" << res.rank
                      << " rank_ratio=" << res.rank_ratio
                      << " error_ratio=" << res.error_ratio
                      << " bitrate_bits=" << res.bitrate_bits << "\n";
        } else if (pre->parsed()) {
            GridMap map = elevation_to_traversability(load_matrix_csv(elev_in));
            if (elev_out.size() > 4 &&
                elev_out.compare(elev_out.size() - 4, 4, ".pgm") == 0)
                save_pgm(map.values, map.rows, map.cols, elev_out);
            else
                save_csv(map.values, map.rows, map.cols, elev_out);
            std::cout << "wrote " << elev_out << " (" << map.rows << "x"
                      << map.cols << ")\n";
        } else if (sweep->parsed()) {
            SimConfig cfg = load_with_overrides(cfg_sweep, ov_sweep);
            GridMap map = load_checked(cfg, full_scale);
            std::vector<double> alphas = parse_values(values_str);
            std::ostringstream csv;
            csv.precision(17);
            if (cfg.mode == SimMode::oneshot) {
                csv << "alpha,rank,rank_ratio,error_ratio,bitrate_bits\n";
                for (double alpha : alphas) {
                    SimConfig c = cfg;
                    c.alpha = alpha;
                    OneshotResult r = run_oneshot(c, map);
                    csv << alpha << "," << r.rank << "," << r.rank_ratio << ","
                        << r.error_ratio << "," << r.bitrate_bits << "\n";
                }
            } else {
                csv << "alpha,r_avg,t_reach,c_reach,b_avg,reached\n";
                for (double alpha : alphas) {
                    SimConfig c = cfg;
                    c.alpha = alpha;
                    std::string sub =
                        out_sweep.empty()
                            ? std::string()
                            : out_sweep + "/alpha_" + std::to_string(alpha);
                    Metrics m = run_sequential(c, map, sub).metrics;
                    csv << alpha << "," << m.r_avg << "," << m.t_reach << ","
                        << m.c_reach << "," << m.b_avg << ","
                        << (m.reached ? 1 : 0) << "\n";
                }
            }
            std::cout << csv.str();
            if (!out_sweep.empty()) {
                std::filesystem::create_directories(out_sweep);
                std::ofstream out(out_sweep + "/sweep.csv");
                out << csv.str();
            }
        } else if (verify->parsed()) {
            int failures = verify_oracles();
            if (failures > 0) {
                std::cerr << failures << " oracle check(s) failed\n";
                return 2;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
