#include "doctest.h"

#include "negrate/duality.hpp"
#include "support.hpp"

using namespace negrate;

namespace {

Eigen::Matrix3d symmetric_generator() {
    Eigen::Matrix3d l;
    l << -1.0, 0.4, 0.6, 0.4, -0.9, 0.5, 0.6, 0.5, -1.1;
    return l;
}

RateModel model_of(const Eigen::MatrixXd& l) {
    std::vector<RateTriplet> rates;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        for (Eigen::Index j = 0; j < l.cols(); ++j) {
            if (i != j && l(i, j) != 0.0) rates.push_back({i, j, l(i, j)});
        }
    }
    return RateModel::finite(StateSpace::finite(testing::index_labels(static_cast<std::size_t>(l.rows()))),
                             std::move(rates), std::vector<double>(static_cast<std::size_t>(l.rows()), 0.0));
}

DualityInstance identity_instance() {
    const Eigen::Matrix3d l = symmetric_generator();
    return DualityInstance::make(DenseOperator(l), model_of(l), Eigen::Matrix3d::Identity());
}

}  // namespace

TEST_CASE("lifted duality function") {
    Eigen::Matrix2d h;
    h << 1.0, 2.0, -3.0, 0.5;
    auto lift = lift_duality_function(h, 1);
    CHECK(lift(PairConfiguration::particle_at(0)) == -3.0);
    PairConfiguration pair;
    pair.add_plus(1);
    pair.add_minus(1);
    CHECK(lift(pair) == 0.0);
    PairConfiguration c;
    c.add_plus(0, 2);
    c.add_minus(1);
    CHECK(lift(c) == -6.0 - 0.5);
    CHECK(lift(c.swapped()) == -lift(c));
    CHECK_THROWS_AS(lift_duality_function(h, 2), ConfigError);
}

TEST_CASE("instance validation") {
    const Eigen::Matrix3d l = symmetric_generator();
    Eigen::Matrix3d bad = l;
    bad(0, 0) += 0.1;
    CHECK_THROWS_AS(DualityInstance::make(DenseOperator(bad), model_of(l), Eigen::Matrix3d::Identity()), ModelError);
    CHECK_THROWS_AS(DualityInstance::make(DenseOperator(l), model_of(l), Eigen::Matrix2d::Identity()), ModelError);
    CHECK_THROWS_AS(DualityInstance::make(DenseOperator(l), model_of(l), Eigen::Matrix3d::Identity(), 0.5),
                    ModelError);
    auto with_v = RateModel::finite(StateSpace::finite({"0", "1", "2"}), {{0, 1, 1.0}}, {0.0, 0.3, 0.0});
    CHECK_THROWS_AS(DualityInstance::make(DenseOperator(l), with_v, Eigen::Matrix3d::Identity()), ModelError);
    CHECK(identity_instance().h_bound == 1.0);
}

TEST_CASE("instances load from JSON") {
    nlohmann::json doc = {{"L_X", {{-1.0, 1.0}, {2.0, -2.0}}},
                          {"L_Y", {{"states", {"u", "v"}}, {"rates", {{"u", "v", 1.0}, {"v", "u", 2.0}}}}},
                          {"H", {{1.0, 0.0}, {0.0, 1.0}}}};
    auto inst = load_duality_instance(doc);
    CHECK(inst.lx.dimension() == 2);
    CHECK(inst.ly.space().size() == 2);
    doc.erase("H");
    CHECK_THROWS_AS(load_duality_instance(doc), ModelError);
}

TEST_CASE("t = 0 gives H-lift exactly on both sides") {
    auto inst = identity_instance();
    BranchingOptions o;
    o.run = {100, 1, 1};
    auto r = verify_lifted_duality(inst, 1, PairConfiguration::particle_at(1), 0.0, o);
    CHECK(r.residual == 0.0);
    CHECK(r.lhs == 1.0);
    CHECK(r.rhs.value == 1.0);
    CHECK(r.passed);
}

TEST_CASE("the identity instance passes and is lambda independent") {
    auto inst = identity_instance();
    for (std::size_t x = 0; x < 3; ++x) {
        for (State y = 0; y < 3; ++y) {
            double values[3], errors[3];
            int k = 0;
            for (auto lambda : {AnnihilationRate(0.0), AnnihilationRate(1.0), AnnihilationRate::infinite()}) {
                BranchingOptions o;
                o.lambda = lambda;
                o.run = {20000, 50 + static_cast<std::uint64_t>(y), 1};
                auto r = verify_lifted_duality(inst, x, PairConfiguration::particle_at(y), 0.6, o);
                // Independent left side: e^{tL} is symmetric, so E_x 1{X_t = y} = P_t(x, y).
                CHECK(r.lhs == doctest::Approx(testing::taylor_expm(symmetric_generator(), 0.6)(x, y)).epsilon(1e-12));
                CHECK(r.passed);
                values[k] = r.rhs.value;
                errors[k++] = r.rhs.std_error;
            }
            CHECK(testing::jointly_within(values[0], errors[0], values[1], errors[1]));
            CHECK(testing::jointly_within(values[0], errors[0], values[2], errors[2]));
        }
    }
}

TEST_CASE("pair starts cancel") {
    auto inst = identity_instance();
    PairConfiguration pair;
    pair.add_plus(2);
    pair.add_minus(2);
    BranchingOptions o;
    o.run = {20000, 5, 1};
    auto r = verify_lifted_duality(inst, 0, pair, 0.5, o);
    CHECK(r.lhs == 0.0);
    CHECK(r.passed);
    o.lambda = AnnihilationRate::infinite();
    r = verify_lifted_duality(inst, 0, pair, 0.5, o);
    CHECK(r.rhs.value == 0.0);
    CHECK(r.passed);
}

TEST_CASE("general starts decompose linearly") {
    auto inst = identity_instance();
    BranchingOptions o;
    o.run = {30000, 9, 1};
    PairConfiguration mixed;
    mixed.add_plus(0, 2);
    mixed.add_minus(1);
    auto whole = verify_lifted_duality(inst, 2, mixed, 0.5, o);
    o.run.seed = 10;
    auto a = verify_lifted_duality(inst, 2, PairConfiguration::particle_at(0), 0.5, o);
    o.run.seed = 11;
    auto b = verify_lifted_duality(inst, 2, PairConfiguration::particle_at(1), 0.5, o);
    const double combined = 2 * a.rhs.value - b.rhs.value;
    const double se = std::sqrt(4 * a.rhs.std_error * a.rhs.std_error + b.rhs.std_error * b.rhs.std_error +
                                whole.rhs.std_error * whole.rhs.std_error);
    CHECK(std::abs(whole.rhs.value - combined) <= 3 * se);
    CHECK(whole.passed);
}

TEST_CASE("a violated generator relation is refused") {
    const Eigen::Matrix3d l = symmetric_generator();
    Eigen::Matrix3d other = l;
    other(0, 1) += 0.2;
    other(0, 0) -= 0.2;
    auto inst = DualityInstance::make(DenseOperator(l), model_of(other), Eigen::Matrix3d::Identity());
    BranchingOptions o;
    o.run = {100, 1, 1};
    CHECK_THROWS_AS(verify_lifted_duality(inst, 0, PairConfiguration::particle_at(0), 0.5, o),
                    DualityPreconditionError);
}

TEST_CASE("a dual with negative rates") {
    // L_Y has r(0,1) = -1/2; H solves L_X H = H L_Y^T (worked by hand through the
    // common eigenbasis of both generators).
    Eigen::Matrix2d lx;
    lx << -0.5, 0.5, 0.5, -0.5;
    Eigen::Matrix2d ly;
    ly << 0.5, -0.5, 1.5, -1.5;
    Eigen::Matrix2d h;
    h << 0.0, -1.0, 1.0, 2.0;
    auto inst = DualityInstance::make(DenseOperator(lx), model_of(ly), h);
    CHECK(inst.h_bound == 2.0);
    CHECK(generator_relation_residual(inst.lx, to_dense(inst.ly), h) == 0.0);
    for (auto lambda : {AnnihilationRate(0.0), AnnihilationRate(1.0), AnnihilationRate::infinite()}) {
        BranchingOptions o;
        o.lambda = lambda;
        o.run = {40000, 12, 1};
        for (std::size_t x = 0; x < 2; ++x) {
            for (State y = 0; y < 2; ++y) {
                auto r = verify_lifted_duality(inst, x, PairConfiguration::particle_at(y), 0.7, o);
                CHECK(r.passed);
            }
        }
    }
}
