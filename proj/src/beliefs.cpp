#include "ratemap/beliefs.hpp"

#include <stdexcept>

#include "ratemap/rdcomp.hpp"

namespace ratemap {

namespace {

void symmetrize(Eigen::MatrixXd& p) {
    p = ((p + p.transpose()) * 0.5).eval();
}

Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& p,
                            const std::vector<int>& idx) {
    Eigen::MatrixXd out(p.rows(), idx.size());
    for (size_t j = 0; j < idx.size(); ++j) out.col(j) = p.col(idx[j]);
    return out;
}

bool is_exactly_diagonal(const Eigen::MatrixXd& p) {
    for (int j = 0; j < p.cols(); ++j)
        for (int i = 0; i < p.rows(); ++i)
            if (i != j && p(i, j) != 0.0) return false;
    return true;
}

// Row index of the single nonzero of each theta row, or empty if any row
// has more than one nonzero entry.
std::vector<std::pair<int, double>> axis_rows(const Eigen::MatrixXd& theta) {
    std::vector<std::pair<int, double>> rows;
    rows.reserve(theta.rows());
    for (int i = 0; i < theta.rows(); ++i) {
        int nz = -1;
        for (int j = 0; j < theta.cols(); ++j) {
            if (theta(i, j) != 0.0) {
                if (nz >= 0) return {};
                nz = j;
            }
        }
        if (nz < 0) return {};
        rows.emplace_back(nz, theta(i, nz));
    }
    return rows;
}

}  // namespace

Belief update_own(const Belief& b, const FovSelection& sel,
                  const Eigen::VectorXd& y_a, double sigma_m_sq) {
    const int k = sel.size();
    if (k < 1) throw std::invalid_argument("update_own: empty selection");
    if (y_a.size() != k) throw std::invalid_argument("update_own: size mismatch");
    if (sigma_m_sq <= 0.0)
        throw std::invalid_argument("update_own: sigma_m_sq must be positive");

    Eigen::MatrixXd pc = gather_cols(b.cov, sel.indices);  // d x k
    Eigen::MatrixXd s(k, k);                               // C P C^T + sigma^2 I
    for (int i = 0; i < k; ++i) s.row(i) = pc.row(sel.indices[i]);
    s.diagonal().array() += sigma_m_sq;

    Eigen::VectorXd innov(k);
    for (int i = 0; i < k; ++i) innov[i] = y_a[i] - b.mean[sel.indices[i]];

    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("update_own: innovation matrix not PD");
    Eigen::MatrixXd gain = llt.solve(pc.transpose()).transpose();  // d x k

    Belief out;
    out.mean = b.mean + gain * innov;
    out.cov = b.cov - gain * pc.transpose();
    symmetrize(out.cov);
    return out;
}

Belief update_compressed(const Belief& b, const FovSelection& sel_b,
                         const CompressionPlan& plan,
                         const Eigen::VectorXd& y_b) {
    const int r = plan.rank();
    if (r == 0) return b;
    if (plan.theta.cols() != sel_b.size() || y_b.size() != r)
        throw std::invalid_argument("update_compressed: dimension mismatch");

    Eigen::VectorXd noise_var = plan.deltas.array().square() / 12.0;

    // Scalar fast path: diagonal covariance observed through axis-aligned
    // compression rows stays diagonal, so the update decouples per cell.
    if (is_exactly_diagonal(b.cov)) {
        auto rows = axis_rows(plan.theta);
        if (!rows.empty()) {
            Belief out = b;
            for (int i = 0; i < r; ++i) {
                auto [j, scale] = rows[i];
                int g = sel_b.indices[j];
                double p = out.cov(g, g);
                double s = scale * scale * p + noise_var[i];
                double gain = p * scale / s;
                out.mean[g] += gain * (y_b[i] - scale * out.mean[g]);
                out.cov(g, g) = p - gain * scale * p;
            }
            return out;
        }
    }

    Eigen::MatrixXd pcb = gather_cols(b.cov, sel_b.indices);   // d x d_B
    Eigen::MatrixXd ph = pcb * plan.theta.transpose();         // d x r
    Eigen::MatrixXd ph_b(sel_b.size(), r);
    for (int j = 0; j < sel_b.size(); ++j) ph_b.row(j) = ph.row(sel_b.indices[j]);
    Eigen::MatrixXd s = plan.theta * ph_b;  // Theta P_BB Theta^T + N
    symmetrize(s);
    s.diagonal() += noise_var;

    Eigen::VectorXd mean_b(sel_b.size());
    for (int j = 0; j < sel_b.size(); ++j) mean_b[j] = b.mean[sel_b.indices[j]];
    Eigen::VectorXd innov = y_b - plan.theta * mean_b;

    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("update_compressed: innovation matrix not PD");
    Eigen::MatrixXd gain = llt.solve(ph.transpose()).transpose();  // d x r

    Belief out;
    out.mean = b.mean + gain * innov;
    out.cov = b.cov - gain * ph.transpose();
    symmetrize(out.cov);
    return out;
}

BlockCov marginal_blocks(const Eigen::MatrixXd& cov, const FovSelection& sel_b) {
    const int d = static_cast<int>(cov.rows());
    FovSelection comp = complement_indices(sel_b, d);
    const int db = sel_b.size(), dout = comp.size();
    BlockCov blocks;
    blocks.p_bb.resize(db, db);
    blocks.p_ob.resize(dout, db);
    blocks.p_oo.resize(dout, dout);
    for (int j = 0; j < db; ++j) {
        for (int i = 0; i < db; ++i)
            blocks.p_bb(i, j) = cov(sel_b.indices[i], sel_b.indices[j]);
        for (int i = 0; i < dout; ++i)
            blocks.p_ob(i, j) = cov(comp.indices[i], sel_b.indices[j]);
    }
    for (int j = 0; j < dout; ++j)
        for (int i = 0; i < dout; ++i)
            blocks.p_oo(i, j) = cov(comp.indices[i], comp.indices[j]);
    return blocks;
}

BlockCov marginal_blocks(const Belief& b, const FovSelection& sel_b) {
    return marginal_blocks(b.cov, sel_b);
}

Eigen::VectorXd project_estimate(const Belief& b) {
    return b.mean.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace ratemap
