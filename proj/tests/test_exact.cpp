#include "doctest.h"

#include "negrate/exact.hpp"
#include "support.hpp"

using namespace negrate;

TEST_CASE("to_dense") {
    auto one = RateModel::finite(StateSpace::finite({"a"}), {}, {2.5});
    CHECK(to_dense(one).matrix()(0, 0) == 2.5);

    auto two = RateModel::finite(StateSpace::finite({"1", "2"}), {{0, 1, -1.0}}, {0.0, 0.0});
    Eigen::Matrix2d expected;
    expected << 1.0, -1.0, 0.0, 0.0;
    CHECK(to_dense(two).matrix() == expected);

    negrate::Rng rng = negrate::Rng::for_replica(21, 0);
    for (int trial = 0; trial < 20; ++trial) {
        auto cm = testing::random_model(rng, 5);
        CHECK((to_dense(cm.model).matrix() - cm.a).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK_THROWS_AS(DenseOperator(Eigen::MatrixXd(2, 3)), ModelError);
}

TEST_CASE("expm_apply at t = 0 is the identity") {
    negrate::Rng rng = negrate::Rng::for_replica(22, 0);
    auto cm = testing::random_model(rng, 4);
    Eigen::VectorXd f = Eigen::VectorXd::Random(4);
    CHECK(expm_apply(DenseOperator(cm.a), f, 0.0) == f);
}

TEST_CASE("expm_apply preserves constants without potential") {
    auto corpus = testing::random_corpus(23, 10, false);
    for (const auto& cm : corpus) {
        const auto n = cm.a.rows();
        for (double t : {0.1, 0.5, 1.0, 3.0}) {
            // Large ||tA|| may make 1e-10 unreachable; then the oracle must say so.
            try {
                auto v = expm_apply(DenseOperator(cm.a), Eigen::VectorXd::Ones(n), t);
                CHECK((v.array() - 1.0).abs().maxCoeff() < 1e-10);
            } catch (const OracleError&) {
                CHECK(t > 1.0);
            }
        }
    }
}

TEST_CASE("symmetric two-state generator") {
    Eigen::Matrix2d a;
    a << -1, 1, 1, -1;
    auto v = expm_apply(DenseOperator(a), Eigen::Vector2d(1, 0), 1.0);
    CHECK(v(0) == doctest::Approx((1 + std::exp(-2.0)) / 2).epsilon(1e-14));
    CHECK(v(1) == doctest::Approx((1 - std::exp(-2.0)) / 2).epsilon(1e-14));

    // Markov rows stay probability vectors.
    auto p = expm(DenseOperator(a), 2.0);
    CHECK(p.minCoeff() >= 0.0);
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("expm matches an extended-precision series on the corpus") {
    auto corpus = testing::random_corpus(24, 20);
    for (const auto& cm : corpus) {
        for (double t : {0.25, 0.5, 1.0}) {
            double bound = 0.0;
            auto e = expm(DenseOperator(cm.a), t, kDefaultExpmTolerance, &bound);
            auto ref = testing::taylor_expm(cm.a, t);
            const double err = (e - ref).cwiseAbs().rowwise().sum().maxCoeff();
            CHECK(err <= std::max(bound, 1e-14) * 1.0000001 + 1e-15);
            CHECK(bound <= kDefaultExpmTolerance);
        }
    }
}

TEST_CASE("expm reports an unreachable tolerance") {
    Eigen::Matrix2d a;
    a << 40, -40, -40, 40;
    CHECK_THROWS_AS(expm(DenseOperator(a), 1.0, 1e-14), OracleError);
}

TEST_CASE("semigroup property") {
    auto corpus = testing::random_corpus(25, 20);
    negrate::Rng rng = negrate::Rng::for_replica(25, 1);
    for (const auto& cm : corpus) {
        const DenseOperator a(cm.a);
        auto fv = testing::random_vector(rng, static_cast<std::size_t>(cm.a.rows()));
        Eigen::VectorXd f = Eigen::Map<Eigen::VectorXd>(fv.data(), cm.a.rows());
        for (auto [t, s] : {std::pair{0.25, 0.5}, std::pair{0.3, 0.7}, std::pair{0.1, 0.15}}) {
            auto composed = expm_apply(a, expm_apply(a, f, t), s);
            auto direct = expm_apply(a, f, t + s);
            const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
            CHECK((composed - direct).cwiseAbs().maxCoeff() <= 10 * kDefaultExpmTolerance * scale);
        }
    }
}

TEST_CASE("finite-difference derivative at zero") {
    auto corpus = testing::random_corpus(26, 10);
    negrate::Rng rng = negrate::Rng::for_replica(26, 1);
    for (const auto& cm : corpus) {
        const DenseOperator a(cm.a);
        auto fv = testing::random_vector(rng, static_cast<std::size_t>(cm.a.rows()));
        Eigen::VectorXd f = Eigen::Map<Eigen::VectorXd>(fv.data(), cm.a.rows());
        const Eigen::VectorXd af = cm.a * f;
        const Eigen::VectorXd a2f = cm.a * af;
        double errs[2];
        int k = 0;
        for (double h : {1e-4, 1e-5}) {
            Eigen::VectorXd d = (expm_apply(a, f, h, 1e-13) - f) / h;
            errs[k++] = (d - af).cwiseAbs().maxCoeff();
            // First-order error: h/2 A^2 f plus rounding of order eps/h.
            CHECK(errs[k - 1] <= 0.5 * h * a2f.cwiseAbs().maxCoeff() * 1.1 + 1e-9);
        }
        // Error shrinks roughly tenfold with h (first-order scaling).
        if (a2f.cwiseAbs().maxCoeff() > 1e-3) CHECK(errs[1] < 0.2 * errs[0]);
    }
}

TEST_CASE("generator relation residual") {
    Eigen::Matrix3d lx;
    lx << -1.0, 0.5, 0.5, 0.5, -0.8, 0.3, 0.5, 0.3, -0.8;
    const DenseOperator x(lx);
    CHECK(generator_relation_residual(x, DenseOperator(Eigen::Matrix3d(lx.transpose())),
                                      Eigen::Matrix3d::Identity()) == 0.0);
    CHECK(generator_relation_residual(DenseOperator(Eigen::Matrix2d::Zero()),
                                      DenseOperator(Eigen::Matrix2d::Zero()), Eigen::Matrix2d::Random()) == 0.0);

    Eigen::Matrix3d perturbed = lx;
    perturbed(0, 1) += 1e-3;
    CHECK(generator_relation_residual(x, DenseOperator(perturbed), Eigen::Matrix3d::Identity()) ==
          doctest::Approx(1e-3).epsilon(1e-9));

    CHECK_THROWS_AS(generator_relation_residual(x, DenseOperator(Eigen::Matrix2d::Zero()), Eigen::Matrix3d::Identity()),
                    ConfigError);
}
