#include "ratemap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ratemap {

namespace {

constexpr double kLn2 = 0.6931471805599453;

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Cell parse_cell(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos)
        throw std::runtime_error("expected row,col pair: " + s);
    return {std::stoi(trim(s.substr(0, comma))),
            std::stoi(trim(s.substr(comma + 1)))};
}

std::vector<Cell> parse_cell_list(const std::string& s) {
    std::vector<Cell> cells;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
        tok = trim(tok);
        if (!tok.empty()) cells.push_back(parse_cell(tok));
    }
    return cells;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
    Eigen::VectorXd out(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

bool plans_identical(const CompressionPlan& a, const CompressionPlan& b) {
    if (a.rank() != b.rank() || a.theta.cols() != b.theta.cols()) return false;
    if (a.theta.size() == 0) return true;
    if (std::memcmp(a.theta.data(), b.theta.data(),
                    sizeof(double) * a.theta.size()) != 0)
        return false;
    return std::memcmp(a.deltas.data(), b.deltas.data(),
                       sizeof(double) * a.deltas.size()) == 0;
}

}  // namespace

std::vector<Cell> boustrophedon_path(int r0, int c0, int r1, int c1,
                                     int stride) {
    std::vector<Cell> path;
    bool rightward = true;
    for (int r = r0; r <= r1; r += stride) {
        if (rightward)
            for (int c = c0; c <= c1; ++c) path.push_back({r, c});
        else
            for (int c = c1; c >= c0; --c) path.push_back({r, c});
        rightward = !rightward;
    }
    return path;
}

void apply_override(SimConfig& cfg, const std::string& key,
                    const std::string& value) {
    if (key == "map") cfg.map_path = value;
    else if (key == "start") cfg.seeker_start = parse_cell(value);
    else if (key == "goal") cfg.seeker_goal = parse_cell(value);
    else if (key == "supporter_path") cfg.supporter_path = parse_cell_list(value);
    else if (key == "supporter_sweep") {
        std::vector<int> v;
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) v.push_back(std::stoi(trim(tok)));
        if (v.size() != 4 && v.size() != 5)
            throw std::runtime_error("supporter_sweep expects r0,c0,r1,c1[,stride]");
        cfg.supporter_path = boustrophedon_path(v[0], v[1], v[2], v[3],
                                                v.size() == 5 ? v[4] : 1);
    }
    else if (key == "fov_seeker") cfg.fov_seeker = std::stoi(value);
    else if (key == "fov_supporter") cfg.fov_supporter = std::stoi(value);
    else if (key == "alpha") cfg.alpha = std::stod(value);
    else if (key == "tau") cfg.tau = std::stod(value);
    else if (key == "sigma") cfg.sigma = std::stod(value);
    else if (key == "weight_floor") cfg.weight_floor = std::stod(value);
    else if (key == "a") cfg.a = std::stod(value);
    else if (key == "epsilon") cfg.epsilon = std::stod(value);
    else if (key == "sigma_m_sq") cfg.sigma_m_sq = std::stod(value);
    else if (key == "prior_mean") cfg.prior_mean = std::stod(value);
    else if (key == "prior_block") cfg.prior_block = std::stoi(value);
    else if (key == "prior_cov") cfg.prior_cov = std::stod(value);
    else if (key == "weight_offset") cfg.weight_offset = std::stod(value);
    else if (key == "seed") cfg.session_seed = std::stoull(value);
    else if (key == "measurement_seed") cfg.measurement_seed = std::stoull(value);
    else if (key == "max_steps") cfg.max_steps = std::stoi(value);
    else if (key == "snapshot_every") cfg.snapshot_every = std::stoi(value);
    else if (key == "mode") {
        if (value == "sequential") cfg.mode = SimMode::sequential;
        else if (value == "oneshot") cfg.mode = SimMode::oneshot;
        else throw std::runtime_error("unknown mode: " + value);
    }
    else if (key == "strategy") {
        if (value == "rd") cfg.strategy = Strategy::rd;
        else if (value == "fully_informed") cfg.strategy = Strategy::fully_informed;
        else if (value == "uninformed") cfg.strategy = Strategy::uninformed;
        else throw std::runtime_error("unknown strategy: " + value);
    }
    else if (key == "noise_v") cfg.noise_v = std::stod(value);
    else throw std::runtime_error("unknown config key: " + key);
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    SimConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

SequentialSim::SequentialSim(const SimConfig& cfg, const GridMap& map)
    : cfg_(cfg), map_(map), seeker_cell_(cfg.seeker_start) {
    if (!map_.contains(cfg.seeker_start) || !map_.contains(cfg.seeker_goal))
        throw std::runtime_error("seeker start/goal outside map");
    if (cfg_.supporter_path.empty())
        throw std::runtime_error("supporter path is empty");
    const int d = map_.size();
    seeker_.mean = cfg_.prior_block > 0
                       ? block_average_prior(map_, cfg_.prior_block)
                       : Eigen::VectorXd::Constant(d, cfg_.prior_mean);
    seeker_.cov = cfg_.prior_cov * Eigen::MatrixXd::Identity(d, d);
    supporter_cov_ = seeker_.cov;
    std::uint64_t mseed = cfg_.measurement_seed != 0
                              ? cfg_.measurement_seed
                              : cfg_.session_seed ^ 0xA5A5A5A55A5A5A5AULL;
    meas_rng_.seed(mseed);
    visited_cost_ = map_.at(seeker_cell_);
}

Cell SequentialSim::supporter_cell() const {
    size_t i = std::min(supporter_idx_, cfg_.supporter_path.size() - 1);
    return cfg_.supporter_path[i];
}

double SequentialSim::gauss_noise() { return normal_(meas_rng_); }

bool SequentialSim::done() const {
    return seeker_cell_ == cfg_.seeker_goal || t_ >= cfg_.max_steps;
}

StepRecord SequentialSim::step() {
    if (done()) throw std::logic_error("step() after run finished");
    StepRecord rec;
    rec.step = t_;
    rec.seeker = seeker_cell_;
    Cell sup = supporter_cell();
    rec.supporter = sup;

    // (1) Seeker's own noisy FOV measurement, Supporter replicates the
    // covariance-only effect of the same update.
    FovSelection sel_a =
        fov_indices(seeker_cell_, cfg_.fov_seeker, cfg_.fov_seeker, map_);
    Eigen::VectorXd y_a(sel_a.size());
    double noise_std = std::sqrt(cfg_.sigma_m_sq);
    for (int i = 0; i < sel_a.size(); ++i)
        y_a[i] = map_.values[sel_a.indices[i]] + noise_std * gauss_noise();
    seeker_ = update_own(seeker_, sel_a, y_a, cfg_.sigma_m_sq);
    {
        Belief rep{Eigen::VectorXd::Zero(map_.size()), supporter_cov_};
        supporter_cov_ = update_own(rep, sel_a,
                                    Eigen::VectorXd::Zero(sel_a.size()),
                                    cfg_.sigma_m_sq)
                             .cov;
    }

    // (2) Plan on the projected estimate.
    PlanConfig pc{cfg_.a, cfg_.epsilon, false};
    Eigen::VectorXd x_tilde = project_estimate(seeker_);
    std::vector<Cell> path = plan(x_tilde, map_.rows, map_.cols, seeker_cell_,
                                  cfg_.seeker_goal, pc);
    rec.path_len = static_cast<int>(path.size());

    FovSelection sel_b =
        fov_indices(sup, cfg_.fov_supporter, cfg_.fov_supporter, map_);

    if (cfg_.strategy == Strategy::uninformed) {
        supporter_plan_ = CompressionPlan{};
        seeker_plan_ = CompressionPlan{};
        last_message_ = frame(WireMessage{static_cast<std::uint32_t>(t_), sup, {}});
    } else if (cfg_.strategy == Strategy::fully_informed) {
        // Near-exact measurement of the whole Supporter FOV.
        const int db = sel_b.size();
        CompressionPlan fi;
        fi.theta = Eigen::MatrixXd::Identity(db, db);
        fi.deltas = Eigen::VectorXd::Constant(db, std::sqrt(12.0 * 1e-12));
        supporter_plan_ = fi;
        seeker_plan_ = fi;
        BlockCov blocks = marginal_blocks(seeker_.cov, sel_b);
        rec.surrogate_bits =
            bitrate_direct(fi.theta, fi.deltas, blocks.p_bb) / kLn2;
        Eigen::VectorXd y_b = gather(map_.values, sel_b.indices);
        seeker_ = update_compressed(seeker_, sel_b, fi, y_b);
        Belief rep{Eigen::VectorXd::Zero(map_.size()), supporter_cov_};
        supporter_cov_ =
            update_compressed(rep, sel_b, fi, Eigen::VectorXd::Zero(db)).cov;
        rec.rank = db;
        last_message_ = frame(WireMessage{static_cast<std::uint32_t>(t_), sup, {}});
    } else {
        WeightVector weights =
            path_weights(path, cfg_.sigma, map_, cfg_.weight_floor);
        Eigen::MatrixXd v_mat;
        const Eigen::MatrixXd* vp = nullptr;
        if (cfg_.noise_v) {
            v_mat = *cfg_.noise_v *
                    Eigen::MatrixXd::Identity(sel_b.size(), sel_b.size());
            vp = &v_mat;
        }

        // Both sides design independently from their own covariance copies.
        DesignResult sup_design = design_compression(
            supporter_cov_, sel_b, weights, cfg_.alpha, cfg_.tau, vp);
        DesignResult seek_design = design_compression(
            seeker_.cov, sel_b, weights, cfg_.alpha, cfg_.tau, vp);
        supporter_plan_ = sup_design.plan;
        seeker_plan_ = seek_design.plan;
        if (!plans_identical(supporter_plan_, seeker_plan_))
            throw std::runtime_error(
                "Supporter/Seeker compression plans diverged at step " +
                std::to_string(t_));

        const int r = supporter_plan_.rank();
        rec.rank = r;
        if (r > 0) {
            BlockCov blocks = marginal_blocks(seeker_.cov, sel_b);
            rec.surrogate_bits = bitrate_direct(supporter_plan_.theta,
                                                supporter_plan_.deltas,
                                                blocks.p_bb) /
                                 kLn2;

            // Supporter encodes its (possibly noisy) observation.
            Eigen::VectorXd x_b = gather(map_.values, sel_b.indices);
            if (cfg_.noise_v) {
                double vstd = std::sqrt(*cfg_.noise_v);
                for (int i = 0; i < x_b.size(); ++i)
                    x_b[i] += vstd * gauss_noise();
            }
            Eigen::VectorXd o = supporter_plan_.theta * x_b;
            DitherSpec ds{cfg_.session_seed, static_cast<std::uint32_t>(t_),
                          supporter_plan_.deltas};
            Eigen::VectorXd eta = dither_sequence(ds);
            Eigen::VectorXi k = quantize(o, supporter_plan_.deltas, eta);
            BitString payload = entropy_code(k);
            last_message_ =
                frame(WireMessage{static_cast<std::uint32_t>(t_), sup, payload});
            rec.payload_bits = static_cast<int>(payload.nbits);

            // Seeker decodes with its independently derived plan.
            WireMessage rx = parse(last_message_);
            DitherSpec ds_rx{cfg_.session_seed, rx.step, seeker_plan_.deltas};
            Eigen::VectorXd eta_rx = dither_sequence(ds_rx);
            Eigen::VectorXi k_rx = entropy_decode(rx.payload, r);
            Eigen::VectorXd y_b = reconstruct(k_rx, seeker_plan_.deltas, eta_rx);
            seeker_ = update_compressed(seeker_, sel_b, seeker_plan_, y_b);
            Belief rep{Eigen::VectorXd::Zero(map_.size()), supporter_cov_};
            supporter_cov_ = update_compressed(rep, sel_b, supporter_plan_,
                                               Eigen::VectorXd::Zero(r))
                                 .cov;
        } else {
            last_message_ =
                frame(WireMessage{static_cast<std::uint32_t>(t_), sup, {}});
        }
    }

    // (6) Both agents advance.
    if (path.size() >= 2) {
        seeker_cell_ = path[1];
        visited_cost_ += map_.at(seeker_cell_);
    }
    ++supporter_idx_;
    ++t_;
    records_.push_back(rec);
    return rec;
}

Metrics SequentialSim::finish() const {
    Metrics m;
    m.t_reach = t_;
    m.c_reach = visited_cost_;
    m.reached = seeker_cell_ == cfg_.seeker_goal;
    if (!records_.empty()) {
        double rsum = 0.0, bsum = 0.0;
        for (const StepRecord& rec : records_) {
            rsum += rec.rank;
            bsum += rec.surrogate_bits;
        }
        m.r_avg = rsum / records_.size();
        m.b_avg = bsum / records_.size();
    }
    return m;
}

namespace {

void write_metrics_csv(const Metrics& m, const std::string& path) {
    std::ofstream out(path);
    out.precision(17);
    out << "r_avg,t_reach,c_reach,b_avg,reached\n";
    out << m.r_avg << "," << m.t_reach << "," << m.c_reach << "," << m.b_avg
        << "," << (m.reached ? 1 : 0) << "\n";
}

void write_steps_csv(const std::vector<StepRecord>& steps,
                     const std::string& path) {
    std::ofstream out(path);
    out.precision(17);
    out << "step,seeker_row,seeker_col,supporter_row,supporter_col,rank,"
           "surrogate_bits,payload_bits,path_len\n";
    for (const StepRecord& r : steps)
        out << r.step << "," << r.seeker.row << "," << r.seeker.col << ","
            << r.supporter.row << "," << r.supporter.col << "," << r.rank << ","
            << r.surrogate_bits << "," << r.payload_bits << "," << r.path_len
            << "\n";
}

}  // namespace

RunResult run_sequential(const SimConfig& cfg, const GridMap& map,
                         const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::ofstream messages;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        messages.open(out_dir + "/messages.bin", std::ios::binary);
    }

    SequentialSim sim(cfg, map);
    while (!sim.done()) {
        StepRecord rec = sim.step();
        if (!out_dir.empty()) {
            const auto& msg = sim.last_message();
            messages.write(reinterpret_cast<const char*>(msg.data()),
                           static_cast<std::streamsize>(msg.size()));
            if (cfg.snapshot_every > 0 && rec.step % cfg.snapshot_every == 0) {
                char name[32];
                std::snprintf(name, sizeof(name), "belief_t%04d.pgm", rec.step);
                save_pgm(project_estimate(sim.seeker_belief()), map.rows,
                         map.cols, out_dir + "/" + name);
            }
        }
    }

    RunResult res{sim.finish(), sim.records(), sim.seeker_belief()};
    if (!out_dir.empty()) {
        write_metrics_csv(res.metrics, out_dir + "/metrics.csv");
        write_steps_csv(res.steps, out_dir + "/steps.csv");
        save_pgm(project_estimate(res.final_belief), map.rows, map.cols,
                 out_dir + "/belief_final.pgm");
        save_csv(res.final_belief.mean, map.rows, map.cols,
                 out_dir + "/belief_mean.csv");
        save_csv(res.final_belief.cov.diagonal(), map.rows, map.cols,
                 out_dir + "/belief_cov_diag.csv");
    }
    return res;
}

OneshotResult run_oneshot(const SimConfig& cfg, const GridMap& map,
                          const std::string& out_dir) {
    const int d = map.size();
    Belief prior;
    prior.mean = cfg.prior_block > 0 ? block_average_prior(map, cfg.prior_block)
                                     : Eigen::VectorXd::Constant(d, cfg.prior_mean);
    prior.cov = cfg.prior_cov * Eigen::MatrixXd::Identity(d, d);

    WeightVector weights{prior.mean.array() + cfg.weight_offset};
    FovSelection all;
    all.indices.resize(d);
    for (int i = 0; i < d; ++i) all.indices[i] = i;

    DesignResult design =
        design_compression(prior.cov, all, weights, cfg.alpha, cfg.tau);

    OneshotResult res;
    res.prior_mean = prior.mean;
    res.rank = design.plan.rank();
    res.rank_ratio = static_cast<double>(res.rank) / d;
    res.bitrate_bits = design.rd.bitrate_nats / kLn2;

    if (res.rank > 0) {
        Eigen::VectorXd o = design.plan.theta * map.values;
        DitherSpec ds{cfg.session_seed, 0, design.plan.deltas};
        Eigen::VectorXd eta = dither_sequence(ds);
        Eigen::VectorXi k = quantize(o, design.plan.deltas, eta);
        Eigen::VectorXd y_b = reconstruct(k, design.plan.deltas, eta);
        res.posterior = update_compressed(prior, all, design.plan, y_b);
    } else {
        res.posterior = prior;
    }

    double prior_err = (map.values - prior.mean).norm();
    double post_err = (map.values - res.posterior.mean).norm();
    res.error_ratio = prior_err > 0.0 ? post_err / prior_err : 1.0;

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        save_pgm(project_estimate(res.posterior), map.rows, map.cols,
                 out_dir + "/posterior_mean.pgm");
        save_csv(res.posterior.mean, map.rows, map.cols,
                 out_dir + "/posterior_mean.csv");
        std::ofstream out(out_dir + "/summary.csv");
        out.precision(17);
        out << "alpha,rank,rank_ratio,error_ratio,bitrate_bits\n";
        out << cfg.alpha << "," << res.rank << "," << res.rank_ratio << ","
            << res.error_ratio << "," << res.bitrate_bits << "\n";
    }
    return res;
}

}  // namespace ratemap
