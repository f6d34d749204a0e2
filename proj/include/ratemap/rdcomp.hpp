#pragma once

#include <Eigen/Dense>
#include <utility>

#include "ratemap/beliefs.hpp"
#include "ratemap/gridmap.hpp"

namespace ratemap {

// Closed-form reverse water-filling output. `sigmas` are the eigenvalues
// of Wt^(1/2) P+ Wt^(1/2); `phi` the clipped levels min(alpha/2, sigma^2);
// `sigma_diag` the information allocation max(0, 2/alpha - 1/sigma^2).
struct RdSolution {
    Eigen::MatrixXd p_bb_next;
    Eigen::MatrixXd m;
    Eigen::VectorXd sigmas;
    Eigen::VectorXd phi;
    Eigen::VectorXd sigma_diag;
    double bitrate_nats = 0.0;
};

// Compression matrix (rows = retained unit eigenvectors of M, sign-fixed)
// together with the per-component quantization steps Delta_i = sqrt(12/lambda_i).
struct CompressionPlan {
    Eigen::MatrixXd theta;   // d_theta x d_B
    Eigen::VectorXd deltas;  // length d_theta, all > 0
    int rank() const { return static_cast<int>(theta.rows()); }
};

struct EffectiveWeight {
    Eigen::MatrixXd w_tilde;
};

// Q = P_OB P_BB^-1 and the Schur complement S = P_OO - Q P_BB Q^T.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> schur_terms(const BlockCov& blocks);

// Wt = W_BB + Q^T W_OO Q with diagonal weight blocks.
EffectiveWeight effective_weight(const Eigen::VectorXd& w_bb,
                                 const Eigen::VectorXd& w_oo,
                                 const Eigen::MatrixXd& q);

// Closed-form solution of min tr(Wt P) - (alpha/2) log det(P) s.t. P <= P+.
// Natural logarithm throughout.
RdSolution reverse_water_filling(const EffectiveWeight& w_tilde,
                                 const Eigen::MatrixXd& p_bb_plus,
                                 double alpha);

// Reduced singular decomposition: eigenpairs of a symmetric PSD matrix
// with eigenvalue > eps_rank, eigenvalues sorted descending. Rows of the
// returned matrix are unit eigenvectors with the first nonzero component
// positive.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> rsd(const Eigen::MatrixXd& a,
                                                double eps_rank = 1e-9);

// RSD with pruning threshold tau on the eigenvalues (SNR components).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> mrsd(const Eigen::MatrixXd& a,
                                                 double tau);

// Bit-rate in nats: (1/2) log det(P+) - (1/2) log det(P_next).
double bitrate(const Eigen::MatrixXd& p_bb_plus,
               const Eigen::MatrixXd& p_bb_next);

// Direct evaluation: (1/2) log det(Theta P Theta^T + N) - (1/2) log det(N).
double bitrate_direct(const Eigen::MatrixXd& theta,
                      const Eigen::VectorXd& deltas,
                      const Eigen::MatrixXd& p_bb);

// Noisy-observation extension: if M < V^-1 holds (strictly, with margin),
// returns RSD((V - V M V)^-1 - V^-1); otherwise condition_ok is false.
struct NoisyAdjustResult {
    bool condition_ok = false;
    Eigen::MatrixXd theta;
    Eigen::VectorXd lambdas;
};
NoisyAdjustResult noisy_adjust(const Eigen::MatrixXd& m,
                               const Eigen::MatrixXd& v);

// End-to-end compression design: permute/marginalize, Schur terms,
// effective weight, reverse water-filling, optional noisy adjustment,
// MRSD pruning. Deterministic for identical inputs.
struct DesignResult {
    CompressionPlan plan;
    RdSolution rd;
    bool noisy_fallback = false;  // condition (M < V^-1) failed; noise-free used
};
DesignResult design_compression(const Eigen::MatrixXd& p_plus,
                                const FovSelection& sel_b,
                                const WeightVector& weights, double alpha,
                                double tau,
                                const Eigen::MatrixXd* v = nullptr);

// Grid-search oracle for the scalar subproblem min q - (alpha/2) ln q
// over (0, sigma_sq]; the closed form is min(alpha/2, sigma_sq).
double oracle_scalar_rd(double sigma_sq, double alpha);

}  // namespace ratemap
