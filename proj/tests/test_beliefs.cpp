#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ratemap/beliefs.hpp"
#include "ratemap/rdcomp.hpp"

using namespace ratemap;

namespace {

Eigen::MatrixXd random_psd(int n, std::mt19937_64& rng, double jitter = 0.1) {
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
    Eigen::MatrixXd p = a * a.transpose();
    p.diagonal().array() += jitter;
    return p;
}

FovSelection make_sel(std::initializer_list<int> idx) {
    return FovSelection{std::vector<int>(idx)};
}

}  // namespace

TEST_CASE("update_own scalar kalman") {
    Belief b{Eigen::VectorXd::Constant(1, 0.5), Eigen::MatrixXd::Identity(1, 1)};
    Eigen::VectorXd y(1);
    y << 1.0;
    Belief out = update_own(b, make_sel({0}), y, 1.0);
    CHECK(out.mean[0] == doctest::Approx(0.75));
    CHECK(out.cov(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("update_own uninformative measurement") {
    Belief b{Eigen::VectorXd::Constant(1, 0.5), Eigen::MatrixXd::Identity(1, 1)};
    Eigen::VectorXd y(1);
    y << 100.0;
    Belief out = update_own(b, make_sel({0}), y, 1e12);
    CHECK(out.mean[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(out.cov(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("update_own leaves independent cells untouched") {
    Belief b{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
    Eigen::VectorXd y(1);
    y << 1.0;
    Belief out = update_own(b, make_sel({0}), y, 0.5);
    CHECK(out.cov(1, 1) == doctest::Approx(1.0));
    CHECK(out.cov(0, 1) == doctest::Approx(0.0));
    CHECK(out.mean[1] == doctest::Approx(0.0));
}

TEST_CASE("update_compressed scalar and rank zero") {
    Belief b{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
    CompressionPlan empty;
    Belief same = update_compressed(b, make_sel({0}), empty, Eigen::VectorXd(0));
    CHECK(same.mean == b.mean);
    CHECK(same.cov == b.cov);

    CompressionPlan plan;
    plan.theta = Eigen::MatrixXd::Ones(1, 1);
    plan.deltas = Eigen::VectorXd::Constant(1, std::sqrt(12.0));  // N = 1
    Eigen::VectorXd y(1);
    y << 1.0;
    Belief out = update_compressed(b, make_sel({0}), plan, y);
    CHECK(out.mean[0] == doctest::Approx(0.5));
    CHECK(out.cov(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("update_compressed scale invariance of the plan") {
    std::mt19937_64 rng(3);
    const int d = 5, db = 3, r = 2;
    Belief b{Eigen::VectorXd::Random(d), random_psd(d, rng)};
    FovSelection sel = make_sel({1, 2, 4});
    CompressionPlan plan;
    plan.theta = Eigen::MatrixXd::Random(r, db);
    plan.deltas = Eigen::VectorXd::Constant(r, 0.3);
    Eigen::VectorXd y = Eigen::VectorXd::Random(r);

    const double s = 3.0;
    CompressionPlan scaled;
    scaled.theta = s * plan.theta;
    scaled.deltas = s * plan.deltas;  // N' = s^2 N
    Belief a = update_compressed(b, sel, plan, y);
    Belief c = update_compressed(b, sel, scaled, s * y);
    CHECK((a.mean - c.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.cov - c.cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gain form matches information form (Woodbury)") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = 2 + static_cast<int>(rng() % 7);  // up to 8
        const int db = 1 + static_cast<int>(rng() % d);
        const int r = 1 + static_cast<int>(rng() % db);
        Belief b{Eigen::VectorXd::Random(d), random_psd(d, rng)};
        std::vector<int> idx(d);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(db);
        std::sort(idx.begin(), idx.end());
        FovSelection sel{idx};

        CompressionPlan plan;
        plan.theta = Eigen::MatrixXd::Random(r, db);
        plan.deltas = Eigen::VectorXd::Random(r).cwiseAbs().array() + 0.1;
        Eigen::VectorXd y = Eigen::VectorXd::Random(r);

        Belief out = update_compressed(b, sel, plan, y);

        // Information form over the full state.
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(db, d);
        for (int i = 0; i < db; ++i) c(i, idx[i]) = 1.0;
        Eigen::MatrixXd h = plan.theta * c;
        Eigen::MatrixXd n_inv =
            (12.0 / plan.deltas.array().square()).matrix().asDiagonal();
        Eigen::MatrixXd info =
            b.cov.inverse() + h.transpose() * n_inv * h;
        Eigen::MatrixXd cov_info = info.inverse();
        REQUIRE((out.cov - cov_info).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("posterior covariance never exceeds prior") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 4;
        Belief b{Eigen::VectorXd::Random(d), random_psd(d, rng)};
        Eigen::VectorXd y = Eigen::VectorXd::Random(2);
        Belief out = update_own(b, make_sel({0, 2}), y, 0.3);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.cov - out.cov);
        REQUIRE(eig.eigenvalues().minCoeff() > -1e-9);
        // symmetry maintained
        REQUIRE((out.cov - out.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("covariance is independent of measurement realizations") {
    std::mt19937_64 rng(17);
    Belief b{Eigen::VectorXd::Zero(5), random_psd(5, rng)};
    FovSelection sel = make_sel({0, 1, 3});
    Eigen::VectorXd y1 = Eigen::VectorXd::Random(3);
    Eigen::VectorXd y2 = Eigen::VectorXd::Random(3);
    Belief a = update_own(b, sel, y1, 0.01);
    Belief c = update_own(b, sel, y2, 0.01);
    CHECK((a.cov - c.cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sequential updates reproduce batch least squares") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 2 + static_cast<int>(rng() % 5);  // up to 6
        Eigen::MatrixXd p0 = random_psd(d, rng, 0.5);
        Eigen::VectorXd x0 = Eigen::VectorXd::Random(d);
        Belief b{x0, p0};

        // A handful of scalar-cell observation rounds.
        const double var = 0.2;
        std::vector<std::pair<int, double>> obs;
        for (int roundn = 0; roundn < 3; ++roundn) {
            for (int cell = 0; cell < d; ++cell) {
                double y = gauss(rng);
                obs.emplace_back(cell, y);
                Eigen::VectorXd yv(1);
                yv << y;
                b = update_own(b, make_sel({cell}), yv, var);
            }
        }

        // Batch linear least squares with the prior as pseudo-observation.
        Eigen::MatrixXd info = p0.inverse();
        Eigen::VectorXd rhs = info * x0;
        for (auto [cell, y] : obs) {
            info(cell, cell) += 1.0 / var;
            rhs[cell] += y / var;
        }
        Eigen::VectorXd mean_batch = info.ldlt().solve(rhs);
        Eigen::MatrixXd cov_batch = info.inverse();
        REQUIRE((b.mean - mean_batch).cwiseAbs().maxCoeff() < 1e-7);
        REQUIRE((b.cov - cov_batch).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("marginal_blocks") {
    SUBCASE("identity covariance") {
        Belief b{Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4)};
        auto blocks = marginal_blocks(b, make_sel({1, 3}));
        CHECK(blocks.p_bb.isIdentity(0.0));
        CHECK(blocks.p_ob.cwiseAbs().maxCoeff() == 0.0);
        CHECK(blocks.p_oo.isIdentity(0.0));
    }
    SUBCASE("2x2 example") {
        Belief b{Eigen::VectorXd::Zero(2), Eigen::MatrixXd(2, 2)};
        b.cov << 1, 0.5, 0.5, 2;
        auto blocks = marginal_blocks(b, make_sel({1}));
        CHECK(blocks.p_bb(0, 0) == 2.0);
        CHECK(blocks.p_ob(0, 0) == 0.5);
        CHECK(blocks.p_oo(0, 0) == 1.0);
    }
    SUBCASE("full selection") {
        std::mt19937_64 rng(1);
        Belief b{Eigen::VectorXd::Zero(3), random_psd(3, rng)};
        auto blocks = marginal_blocks(b, make_sel({0, 1, 2}));
        CHECK((blocks.p_bb - b.cov).cwiseAbs().maxCoeff() == 0.0);
        CHECK(blocks.p_ob.rows() == 0);
        CHECK(blocks.p_oo.rows() == 0);
    }
    SUBCASE("reassembly reproduces the covariance") {
        std::mt19937_64 rng(2);
        const int d = 6;
        Belief b{Eigen::VectorXd::Zero(d), random_psd(d, rng)};
        FovSelection sel = make_sel({0, 2, 5});
        auto blocks = marginal_blocks(b, sel);
        auto comp = complement_indices(sel, d);
        std::vector<int> order = sel.indices;
        order.insert(order.end(), comp.indices.begin(), comp.indices.end());
        Eigen::MatrixXd assembled(d, d);
        const int db = sel.size();
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                double v = i < db && j < db   ? blocks.p_bb(i, j)
                           : i >= db && j < db ? blocks.p_ob(i - db, j)
                           : i < db && j >= db ? blocks.p_ob(j - db, i)
                                               : blocks.p_oo(i - db, j - db);
                REQUIRE(v == b.cov(order[i], order[j]));
                assembled(i, j) = v;
            }
        }
    }
}

TEST_CASE("project_estimate clamps") {
    Belief b{Eigen::VectorXd(3), Eigen::MatrixXd::Identity(3, 3)};
    b.mean << 1.3, -0.2, 0.42;
    auto p = project_estimate(b);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 0.0);
    CHECK(p[2] == 0.42);
}
