#include "ratemap/rdcomp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ratemap {

namespace {

void symmetrize(Eigen::MatrixXd& p) {
    p = ((p + p.transpose()) * 0.5).eval();
}

bool is_exactly_diagonal(const Eigen::MatrixXd& p) {
    for (int j = 0; j < p.cols(); ++j)
        for (int i = 0; i < p.rows(); ++i)
            if (i != j && p(i, j) != 0.0) return false;
    return true;
}

// Shared sign convention so the Seeker and the Supporter derive the same
// factor independently: first nonzero component of each vector positive.
void fix_sign(Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-14) {
            if (v[i] < 0.0) v = -v;
            return;
        }
    }
}

double logdet_chol(const Eigen::MatrixXd& a, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(std::string(what) + ": matrix not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> reduced_eig(const Eigen::MatrixXd& a,
                                                        double threshold) {
    double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw std::invalid_argument("rsd: input not symmetric");

    const int n = static_cast<int>(a.rows());
    std::vector<std::pair<double, int>> kept;  // (eigenvalue, source index)

    if (is_exactly_diagonal(a)) {
        for (int i = 0; i < n; ++i)
            if (a(i, i) > threshold) kept.emplace_back(a(i, i), i);
        std::stable_sort(kept.begin(), kept.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(kept.size(), n);
        Eigen::VectorXd lambdas(kept.size());
        for (size_t r = 0; r < kept.size(); ++r) {
            theta(r, kept[r].second) = 1.0;
            lambdas[r] = kept[r].first;
        }
        return {theta, lambdas};
    }

    Eigen::MatrixXd sym = (a + a.transpose()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("rsd: eigendecomposition failed");
    for (int i = 0; i < n; ++i)
        if (eig.eigenvalues()[i] > threshold)
            kept.emplace_back(eig.eigenvalues()[i], i);
    // Eigen returns ascending order; reverse for descending eigenvalues.
    std::reverse(kept.begin(), kept.end());

    Eigen::MatrixXd theta(kept.size(), n);
    Eigen::VectorXd lambdas(kept.size());
    for (size_t r = 0; r < kept.size(); ++r) {
        Eigen::VectorXd vec = eig.eigenvectors().col(kept[r].second);
        fix_sign(vec);
        theta.row(r) = vec.transpose();
        lambdas[r] = kept[r].first;
    }
    return {theta, lambdas};
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> schur_terms(const BlockCov& blocks) {
    Eigen::MatrixXd p_bb = blocks.p_bb;
    Eigen::LLT<Eigen::MatrixXd> llt(p_bb);
    if (llt.info() != Eigen::Success) {
        p_bb.diagonal().array() += 1e-12;
        llt.compute(p_bb);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("schur_terms: P_BB not factorizable");
    }
    Eigen::VectorXd ldiag = llt.matrixL().toDenseMatrix().diagonal();
    double cond = std::pow(ldiag.maxCoeff() / ldiag.minCoeff(), 2);
    if (!(cond < 1e14))
        throw std::runtime_error(
            "schur_terms: P_BB ill-conditioned, cond ~ " + std::to_string(cond));

    Eigen::MatrixXd q = llt.solve(blocks.p_ob.transpose()).transpose();
    Eigen::MatrixXd s = blocks.p_oo - q * blocks.p_bb * q.transpose();
    symmetrize(s);
    return {q, s};
}

EffectiveWeight effective_weight(const Eigen::VectorXd& w_bb,
                                 const Eigen::VectorXd& w_oo,
                                 const Eigen::MatrixXd& q) {
    EffectiveWeight ew;
    ew.w_tilde = Eigen::MatrixXd(w_bb.asDiagonal());
    if (q.rows() > 0)
        ew.w_tilde += q.transpose() * w_oo.asDiagonal() * q;
    symmetrize(ew.w_tilde);
    return ew;
}

RdSolution reverse_water_filling(const EffectiveWeight& w_tilde,
                                 const Eigen::MatrixXd& p_bb_plus,
                                 double alpha) {
    if (alpha <= 0.0)
        throw std::invalid_argument("reverse_water_filling: alpha must be positive");
    const int n = static_cast<int>(p_bb_plus.rows());
    const double level = alpha / 2.0;
    RdSolution out;
    out.sigmas.resize(n);
    out.phi.resize(n);
    out.sigma_diag.resize(n);

    // Diagonal fast path: with diagonal weight and covariance the problem
    // decouples per cell and no dense eigendecomposition is needed.
    if (is_exactly_diagonal(w_tilde.w_tilde) && is_exactly_diagonal(p_bb_plus)) {
        out.p_bb_next = Eigen::MatrixXd::Zero(n, n);
        out.m = Eigen::MatrixXd::Zero(n, n);
        double nats = 0.0;
        for (int i = 0; i < n; ++i) {
            double w = w_tilde.w_tilde(i, i);
            double s2 = w * p_bb_plus(i, i);
            out.sigmas[i] = s2;
            out.phi[i] = std::min(level, s2);
            out.sigma_diag[i] = s2 > 0.0 ? std::max(0.0, 2.0 / alpha - 1.0 / s2)
                                         : 0.0;
            out.p_bb_next(i, i) = w > 0.0 ? out.phi[i] / w : p_bb_plus(i, i);
            out.m(i, i) = w * out.sigma_diag[i];
            if (s2 > level) nats += 0.5 * (std::log(s2) - std::log(level));
        }
        out.bitrate_nats = nats;
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> weig(w_tilde.w_tilde);
    if (weig.info() != Eigen::Success || weig.eigenvalues().minCoeff() <= 0.0)
        throw std::runtime_error("reverse_water_filling: weight not PD");
    Eigen::VectorXd wsqrt = weig.eigenvalues().array().sqrt();
    Eigen::MatrixXd w_half =
        weig.eigenvectors() * wsqrt.asDiagonal() * weig.eigenvectors().transpose();
    Eigen::MatrixXd w_half_inv = weig.eigenvectors() *
                                 wsqrt.cwiseInverse().asDiagonal() *
                                 weig.eigenvectors().transpose();

    Eigen::MatrixXd g = w_half * p_bb_plus * w_half;
    symmetrize(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("reverse_water_filling: eigendecomposition failed");

    out.sigmas = eig.eigenvalues();
    double nats = 0.0;
    for (int i = 0; i < n; ++i) {
        double s2 = std::max(0.0, out.sigmas[i]);
        out.phi[i] = std::min(level, s2);
        out.sigma_diag[i] =
            s2 > 0.0 ? std::max(0.0, 2.0 / alpha - 1.0 / s2) : 0.0;
        if (s2 > level) nats += 0.5 * (std::log(s2) - std::log(level));
    }
    out.bitrate_nats = nats;

    const Eigen::MatrixXd& vecs = eig.eigenvectors();
    out.p_bb_next =
        w_half_inv * vecs * out.phi.asDiagonal() * vecs.transpose() * w_half_inv;
    out.m =
        w_half * vecs * out.sigma_diag.asDiagonal() * vecs.transpose() * w_half;
    symmetrize(out.p_bb_next);
    symmetrize(out.m);
    return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> rsd(const Eigen::MatrixXd& a,
                                                double eps_rank) {
    return reduced_eig(a, eps_rank);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> mrsd(const Eigen::MatrixXd& a,
                                                 double tau) {
    if (tau <= 0.0) throw std::invalid_argument("mrsd: tau must be positive");
    return reduced_eig(a, tau);
}

double bitrate(const Eigen::MatrixXd& p_bb_plus,
               const Eigen::MatrixXd& p_bb_next) {
    if (p_bb_plus.rows() == 0) return 0.0;
    double nats = 0.5 * logdet_chol(p_bb_plus, "bitrate(P+)") -
                  0.5 * logdet_chol(p_bb_next, "bitrate(P_next)");
    return std::max(0.0, nats);
}

double bitrate_direct(const Eigen::MatrixXd& theta,
                      const Eigen::VectorXd& deltas,
                      const Eigen::MatrixXd& p_bb) {
    if (theta.rows() == 0) return 0.0;
    Eigen::VectorXd noise_var = deltas.array().square() / 12.0;
    Eigen::MatrixXd a = theta * p_bb * theta.transpose();
    symmetrize(a);
    a.diagonal() += noise_var;
    double nats =
        0.5 * logdet_chol(a, "bitrate_direct") - 0.5 * noise_var.array().log().sum();
    return std::max(0.0, nats);
}

NoisyAdjustResult noisy_adjust(const Eigen::MatrixXd& m,
                               const Eigen::MatrixXd& v) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> veig(v);
    if (veig.info() != Eigen::Success || veig.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("noisy_adjust: V must be positive definite");
    Eigen::VectorXd vsqrt = veig.eigenvalues().array().sqrt();
    Eigen::MatrixXd v_half =
        veig.eigenvectors() * vsqrt.asDiagonal() * veig.eigenvectors().transpose();

    Eigen::MatrixXd b = v_half * m * v_half;
    symmetrize(b);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> beig(b);
    NoisyAdjustResult out;
    if (!(beig.eigenvalues().maxCoeff() < 1.0 - 1e-9)) return out;  // M < V^-1 fails

    Eigen::MatrixXd inner = v - v * m * v;
    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success) return out;
    Eigen::MatrixXd adjusted =
        llt.solve(Eigen::MatrixXd::Identity(v.rows(), v.cols())) - v.inverse();
    symmetrize(adjusted);
    out.condition_ok = true;
    std::tie(out.theta, out.lambdas) = rsd(adjusted);
    return out;
}

DesignResult design_compression(const Eigen::MatrixXd& p_plus,
                                const FovSelection& sel_b,
                                const WeightVector& weights, double alpha,
                                double tau, const Eigen::MatrixXd* v) {
    const int d = static_cast<int>(p_plus.rows());
    const int db = sel_b.size();
    if (weights.w.size() != d)
        throw std::invalid_argument("design_compression: weight size mismatch");
    if (tau <= 0.0)
        throw std::invalid_argument("design_compression: tau must be positive");

    BlockCov blocks = marginal_blocks(p_plus, sel_b);
    FovSelection comp = complement_indices(sel_b, d);

    Eigen::VectorXd w_bb(db), w_oo(comp.size());
    for (int i = 0; i < db; ++i) w_bb[i] = weights.w[sel_b.indices[i]];
    for (int i = 0; i < comp.size(); ++i) w_oo[i] = weights.w[comp.indices[i]];

    EffectiveWeight ew;
    if (comp.size() == 0) {
        ew.w_tilde = Eigen::MatrixXd(w_bb.asDiagonal());
    } else {
        auto [q, s] = schur_terms(blocks);
        ew = effective_weight(w_bb, w_oo, q);
    }

    DesignResult out;
    out.rd = reverse_water_filling(ew, blocks.p_bb, alpha);

    Eigen::MatrixXd theta;
    Eigen::VectorXd lambdas;
    if (v != nullptr) {
        NoisyAdjustResult adj = noisy_adjust(out.rd.m, *v);
        if (adj.condition_ok) {
            // Prune low-SNR components of the adjusted information matrix.
            std::vector<int> keep;
            for (int i = 0; i < adj.lambdas.size(); ++i)
                if (adj.lambdas[i] > tau) keep.push_back(i);
            theta.resize(keep.size(), db);
            lambdas.resize(keep.size());
            for (size_t r = 0; r < keep.size(); ++r) {
                theta.row(r) = adj.theta.row(keep[r]);
                lambdas[r] = adj.lambdas[keep[r]];
            }
        } else {
            out.noisy_fallback = true;
            std::tie(theta, lambdas) = mrsd(out.rd.m, tau);
        }
    } else {
        std::tie(theta, lambdas) = mrsd(out.rd.m, tau);
    }

    out.plan.theta = std::move(theta);
    out.plan.deltas = (12.0 / lambdas.array()).sqrt();
    return out;
}

double oracle_scalar_rd(double sigma_sq, double alpha) {
    if (sigma_sq <= 0.0 || alpha <= 0.0)
        throw std::invalid_argument("oracle_scalar_rd: inputs must be positive");
    auto objective = [alpha](double q) {
        return q - (alpha / 2.0) * std::log(q);
    };
    // Log-spaced coarse scan over (0, sigma_sq] (the minimizer can sit many
    // orders of magnitude below sigma_sq), then a linear refinement pass so
    // the objective is resolved well below 1e-5.
    const int npts = 100000;
    const double span = 1e-12;  // scan down to sigma_sq * 1e-12
    double best_q = sigma_sq;
    double best_val = objective(sigma_sq);
    for (int j = 1; j < npts; ++j) {
        double q = sigma_sq * std::pow(span, static_cast<double>(j) / npts);
        double val = objective(q);
        if (val < best_val) {
            best_val = val;
            best_q = q;
        }
    }
    double ratio = std::pow(span, 1.0 / npts);  // adjacent coarse-grid ratio
    double lo = best_q * ratio * ratio;
    double hi = std::min(best_q / ratio / ratio, sigma_sq);
    const int nfine = 10000;
    for (int j = 0; j <= nfine; ++j) {
        double q = lo + (hi - lo) * j / nfine;
        double val = objective(q);
        if (val < best_val) {
            best_val = val;
            best_q = q;
        }
    }
    return best_q;
}

}  // namespace ratemap
