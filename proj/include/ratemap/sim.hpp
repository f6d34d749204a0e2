#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ratemap/beliefs.hpp"
#include "ratemap/channel.hpp"
#include "ratemap/gridmap.hpp"
#include "ratemap/planner.hpp"
#include "ratemap/rdcomp.hpp"

namespace ratemap {

enum class SimMode { sequential, oneshot };
enum class Strategy { rd, fully_informed, uninformed };

struct SimConfig {
    std::string map_path;
    Cell seeker_start;
    Cell seeker_goal;
    std::vector<Cell> supporter_path;  // held at the last entry when exhausted
    int fov_seeker = 5;
    int fov_supporter = 7;
    double alpha = 0.05;
    double tau = 1.4;
    double sigma = 10.0;        // path-weight spread
    double weight_floor = 1e-6;
    double a = 0.025;
    double epsilon = 0.501;
    double sigma_m_sq = 0.01;
    double prior_mean = 0.5;    // constant prior mean, unless prior_block > 0
    int prior_block = 0;        // > 0: block-average prior from the true map
    double prior_cov = 1.0;     // P0 = prior_cov * I
    double weight_offset = 0.001;  // one-shot weights: diag(x0 + offset)
    std::uint64_t session_seed = 1;
    std::uint64_t measurement_seed = 0;  // 0: derived from session_seed
    int max_steps = 1000;
    int snapshot_every = 0;  // 0: final snapshot only
    SimMode mode = SimMode::sequential;
    Strategy strategy = Strategy::rd;
    std::optional<double> noise_v;  // Supporter noise V = noise_v * I
};

SimConfig load_config(const std::string& path);
// key=value override, same keys as the config file.
void apply_override(SimConfig& cfg, const std::string& key,
                    const std::string& value);

// Boustrophedon sweep over the rectangle [r0,r1] x [c0,c1], one row band
// per `stride` rows.
std::vector<Cell> boustrophedon_path(int r0, int c0, int r1, int c1,
                                     int stride = 1);

struct StepRecord {
    int step = 0;
    Cell seeker;
    Cell supporter;
    int rank = 0;
    double surrogate_bits = 0.0;  // Gaussian bit-rate, in bits
    int payload_bits = 0;         // measured entropy-coded payload length
    int path_len = 0;
};

struct Metrics {
    double r_avg = 0.0;
    int t_reach = 0;
    double c_reach = 0.0;
    double b_avg = 0.0;
    bool reached = false;
};

// Per-step protocol driver. The Supporter side holds an independent
// covariance replica; both sides run the compression design and the
// resulting plans must agree bit for bit.
class SequentialSim {
  public:
    SequentialSim(const SimConfig& cfg, const GridMap& map);

    bool done() const;
    StepRecord step();
    Metrics finish() const;

    const Belief& seeker_belief() const { return seeker_; }
    const Eigen::MatrixXd& supporter_cov() const { return supporter_cov_; }
    Cell seeker_cell() const { return seeker_cell_; }
    const CompressionPlan& last_supporter_plan() const { return supporter_plan_; }
    const CompressionPlan& last_seeker_plan() const { return seeker_plan_; }
    const std::vector<std::uint8_t>& last_message() const { return last_message_; }
    const std::vector<StepRecord>& records() const { return records_; }

  private:
    SimConfig cfg_;
    GridMap map_;
    Belief seeker_;
    Eigen::MatrixXd supporter_cov_;
    Cell seeker_cell_;
    size_t supporter_idx_ = 0;
    int t_ = 0;
    double visited_cost_ = 0.0;
    std::mt19937_64 meas_rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    CompressionPlan supporter_plan_;
    CompressionPlan seeker_plan_;
    std::vector<std::uint8_t> last_message_;
    std::vector<StepRecord> records_;

    Cell supporter_cell() const;
    double gauss_noise();
};

struct RunResult {
    Metrics metrics;
    std::vector<StepRecord> steps;
    Belief final_belief;
};

// Runs the sequential protocol to completion. When out_dir is nonempty,
// writes metrics.csv, steps.csv, belief snapshots, and messages.bin there.
RunResult run_sequential(const SimConfig& cfg, const GridMap& map,
                         const std::string& out_dir = "");

struct OneshotResult {
    Belief posterior;
    Eigen::VectorXd prior_mean;
    int rank = 0;
    double rank_ratio = 0.0;
    double error_ratio = 1.0;
    double bitrate_bits = 0.0;
};

OneshotResult run_oneshot(const SimConfig& cfg, const GridMap& map,
                          const std::string& out_dir = "");

}  // namespace ratemap
