#pragma once

#include <Eigen/Dense>
#include <string>

#include "ratemap/gridmap.hpp"

namespace ratemap {

struct CompressionPlan;

// Linear minimum-variance belief over the whole map: mean and dense
// covariance. The covariance is re-symmetrized after every update.
struct Belief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    int dim() const { return static_cast<int>(mean.size()); }
};

// Permuted covariance blocks for a Supporter selection B and its
// complement O: [P_BB P_BO; P_OB P_OO].
struct BlockCov {
    Eigen::MatrixXd p_bb;
    Eigen::MatrixXd p_ob;
    Eigen::MatrixXd p_oo;
};

// Seeker own-observation update: y = C_A x + m, m ~ N(0, sigma_m_sq I).
// Gain form; only a |sel| x |sel| system is solved.
Belief update_own(const Belief& b, const FovSelection& sel,
                  const Eigen::VectorXd& y_a, double sigma_m_sq);

// Compressed-observation update with measurement matrix Theta C_B and
// dither noise covariance N = diag(deltas^2 / 12). A rank-0 plan leaves
// the belief unchanged.
Belief update_compressed(const Belief& b, const FovSelection& sel_b,
                         const CompressionPlan& plan,
                         const Eigen::VectorXd& y_b);

BlockCov marginal_blocks(const Belief& b, const FovSelection& sel_b);
BlockCov marginal_blocks(const Eigen::MatrixXd& cov, const FovSelection& sel_b);

// Elementwise clamp of the mean to [0,1].
Eigen::VectorXd project_estimate(const Belief& b);

}  // namespace ratemap
