#include "doctest.h"

#include "negrate/branching.hpp"
#include "negrate/exact.hpp"
#include "support.hpp"

using namespace negrate;

namespace {

PairConfiguration config(std::initializer_list<std::pair<State, std::uint64_t>> plus,
                         std::initializer_list<std::pair<State, std::uint64_t>> minus) {
    PairConfiguration c;
    for (auto [x, n] : plus) c.add_plus(x, n);
    for (auto [x, n] : minus) c.add_minus(x, n);
    return c;
}

PairConfiguration random_config(Rng& rng, State n_sites, int draws) {
    PairConfiguration c;
    for (int k = 0; k < draws; ++k) {
        const auto x = static_cast<State>(rng() % static_cast<std::uint64_t>(n_sites));
        if (rng() % 2) {
            c.add_plus(x);
        } else {
            c.add_minus(x);
        }
    }
    return c;
}

}  // namespace

TEST_CASE("configuration bookkeeping") {
    auto c = config({{1, 2}, {3, 1}}, {{1, 1}});
    CHECK(c.total_plus() == 3);
    CHECK(c.total_minus() == 1);
    CHECK(c.charge() == 2);
    CHECK(c.coincident_sites() == 1);
    CHECK_THROWS_AS(c.remove_minus(3), ModelError);
    CHECK(c.annihilate_all() == 1);
    CHECK(c == config({{1, 1}, {3, 1}}, {}));
    c.remove_plus(1);
    CHECK(c.plus_counts().count(1) == 0);
    CHECK(c.swapped() == config({}, {{3, 1}}));
}

TEST_CASE("event deltas match the generator terms") {
    const auto base = config({{0, 2}, {1, 1}}, {{1, 1}, {2, 3}});
    auto after = [&](Event e) {
        auto c = base;
        apply_event(c, e);
        return c;
    };
    CHECK(after({EventKind::plus_jump, 0, 2}) == config({{0, 1}, {1, 1}, {2, 1}}, {{1, 1}, {2, 3}}));
    CHECK(after({EventKind::minus_jump, 2, 0}) == config({{0, 2}, {1, 1}}, {{0, 1}, {1, 1}, {2, 2}}));
    CHECK(after({EventKind::plus_branch, 0, 2}) == config({{0, 3}, {1, 1}}, {{1, 1}, {2, 4}}));
    CHECK(after({EventKind::minus_branch, 2, 0}) == config({{0, 3}, {1, 1}}, {{1, 1}, {2, 4}}));
    CHECK(after({EventKind::plus_birth, 1, 1}) == config({{0, 2}, {1, 2}}, {{1, 1}, {2, 3}}));
    CHECK(after({EventKind::plus_death, 1, 1}) == config({{0, 2}}, {{1, 1}, {2, 3}}));
    CHECK(after({EventKind::minus_birth, 0, 0}) == config({{0, 2}, {1, 1}}, {{0, 1}, {1, 1}, {2, 3}}));
    CHECK(after({EventKind::minus_death, 2, 2}) == config({{0, 2}, {1, 1}}, {{1, 1}, {2, 2}}));
    CHECK(after({EventKind::annihilate, 1, 1}) == config({{0, 2}}, {{2, 3}}));
    auto c = base;
    CHECK_THROWS_AS(apply_event(c, {EventKind::annihilate, 0, 0}), ModelError);
    CHECK_THROWS_AS(apply_event(c, {EventKind::minus_jump, 0, 1}), ModelError);
}

TEST_CASE("total event rates") {
    auto m = RateModel::finite(StateSpace::finite({"a", "b", "c"}),
                               {{0, 1, -1.5}, {0, 2, 0.75}, {1, 0, 2.0}}, {-0.5, 0.25, 0.0});
    const SplitRates s(m);
    auto single = total_event_rates(PairConfiguration::particle_at(0), s, AnnihilationRate(0.0));
    CHECK(single.total == doctest::Approx(0.75 + 1.5 + 0.5));
    CHECK(single.rate(EventKind::plus_jump) == 0.75);
    CHECK(single.rate(EventKind::plus_branch) == 1.5);
    CHECK(single.rate(EventKind::plus_death) == 0.5);
    CHECK(single.rate(EventKind::plus_birth) == 0.0);

    CHECK(total_event_rates(PairConfiguration(), s, AnnihilationRate(3.0)).total == 0.0);

    auto pair = config({{2, 1}}, {{2, 1}});
    auto with = total_event_rates(pair, s, AnnihilationRate(2.0));
    CHECK(with.rate(EventKind::annihilate) == 2.0);
    CHECK(total_event_rates(pair, s, AnnihilationRate::infinite()).rate(EventKind::annihilate) == 0.0);

    auto crowd = config({{0, 3}}, {{0, 2}, {1, 1}});
    auto table = total_event_rates(crowd, s, AnnihilationRate(0.5));
    CHECK(table.rate(EventKind::plus_jump) == doctest::Approx(3 * 0.75));
    CHECK(table.rate(EventKind::minus_jump) == doctest::Approx(2 * 0.75 + 2.0));
    CHECK(table.rate(EventKind::minus_branch) == doctest::Approx(2 * 1.5));
    CHECK(table.rate(EventKind::minus_death) == doctest::Approx(2 * 0.5));
    CHECK(table.rate(EventKind::minus_birth) == doctest::Approx(0.25));
    CHECK(table.rate(EventKind::annihilate) == doctest::Approx(0.5 * 3 * 2));
}

TEST_CASE("branching generator acts on lifted observables like A") {
    // sum_e rate(e) [f-lift(cfg + delta_e) - f-lift(cfg)] = (Af)-lift(cfg), for every lambda.
    auto corpus = testing::random_corpus(41, 15);
    Rng rng = Rng::for_replica(41, 1);
    for (const auto& cm : corpus) {
        const auto n = static_cast<State>(cm.a.rows());
        const SplitRates s(cm.model);
        auto fv = testing::random_vector(rng, static_cast<std::size_t>(n));
        const Eigen::VectorXd af = cm.a * Eigen::Map<Eigen::VectorXd>(fv.data(), n);
        auto f = lift_observable_population(Observable::dense(fv));
        auto af_lift = lift_observable_population(
            Observable::dense(std::vector<double>(af.data(), af.data() + af.size())));
        for (int trial = 0; trial < 20; ++trial) {
            const auto cfg = random_config(rng, n, 1 + trial % 7);
            for (double lambda : {0.0, 1.7}) {
                auto table = total_event_rates(cfg, s, AnnihilationRate(lambda));
                double acc = 0.0;
                double total = 0.0;
                for (const auto& we : table.events) {
                    auto next = cfg;
                    apply_event(next, we.event);
                    acc += we.rate * (f(next) - f(cfg));
                    total += we.rate;
                }
                CHECK(total == doctest::Approx(table.total).epsilon(1e-12));
                CHECK(acc == doctest::Approx(af_lift(cfg)).epsilon(1e-10).scale(1.0));
            }
        }
    }
}

TEST_CASE("charge is conserved along every trajectory without potential") {
    auto corpus = testing::random_corpus(42, 5, false);
    for (const auto& cm : corpus) {
        const SplitRates s(cm.model);
        for (auto lambda : {AnnihilationRate(0.0), AnnihilationRate(1.0), AnnihilationRate::infinite()}) {
            for (std::uint64_t i = 0; i < 200; ++i) {
                Rng rng = Rng::for_replica(42, i);
                const auto cfg0 = config({{0, 2}}, {{static_cast<State>(cm.a.rows() - 1), 1}});
                std::uint64_t bad = 0;
                EventObserver obs = [&](const Event&, const PairConfiguration& c) {
                    if (c.charge() != cfg0.charge()) ++bad;
                    if (lambda.is_infinite() && c.coincident_sites() != 0) ++bad;
                };
                simulate_population(s, lambda, cfg0, 0.8, kDefaultPopulationCap, rng, &obs);
                CHECK(bad == 0);
            }
        }
    }
}

TEST_CASE("trivial dynamics") {
    auto still = RateModel::finite(StateSpace::finite({"a", "b"}), {}, {0.0, 0.0});
    const auto cfg0 = config({{0, 2}}, {{1, 1}});
    Rng rng = Rng::for_replica(1, 0);
    CHECK(simulate_population(SplitRates(still), AnnihilationRate(0.0), cfg0, 10.0, 100, rng) == cfg0);

    auto cm = testing::random_corpus(43, 2)[1];
    auto pair = config({{1, 1}}, {{1, 1}});
    CHECK(simulate_population(SplitRates(cm.model), AnnihilationRate::infinite(), pair, 0.0, 100, rng).empty());
    CHECK(simulate_population(SplitRates(cm.model), AnnihilationRate::infinite(), pair, 1.0, 100, rng).empty());
}

TEST_CASE("estimate_branching basics") {
    auto cm = testing::random_corpus(44, 4)[3];
    auto fv = std::vector<double>{0.3, -1.0, 2.0, 0.5, 1.0};
    auto f = Observable::dense(fv);
    BranchingOptions o;
    o.run = {500, 44, 1};
    auto e0 = estimate_branching(cm.model, f, 2, 0.0, o).estimate;
    CHECK(e0.value == 2.0);
    CHECK(e0.std_error == 0.0);

    auto flat = testing::random_corpus(45, 4, false)[3];
    for (auto lambda : {AnnihilationRate(0.0), AnnihilationRate(1.0), AnnihilationRate::infinite()}) {
        o.lambda = lambda;
        auto r = estimate_branching(flat.model, Observable::constant(1.0), 0, 0.7, o).estimate;
        CHECK(r.value == 1.0);
        CHECK(r.std_error == 0.0);
    }
    o.run.replicas = 1;
    CHECK_THROWS_AS(estimate_branching(cm.model, f, 0, 0.5, o), ConfigError);
}

TEST_CASE("random 4-state model against the oracle") {
    Rng rng = Rng::for_replica(46, 0);
    auto cm = testing::random_model(rng, 4);
    auto fv = testing::random_vector(rng, 4);
    const Eigen::VectorXd exact = testing::taylor_expm(cm.a, 0.4) * Eigen::Map<Eigen::VectorXd>(fv.data(), 4);
    for (State x = 0; x < 4; ++x) {
        double values[3], errors[3];
        int k = 0;
        for (auto lambda : {AnnihilationRate(0.0), AnnihilationRate(1.0), AnnihilationRate::infinite()}) {
            BranchingOptions o;
            o.lambda = lambda;
            o.run = {100000, 46, 1};
            auto e = estimate_branching(cm.model, Observable::dense(fv), x, 0.4, o).estimate;
            CHECK(e.aborted_replicas == 0);
            CHECK(testing::within_stderr(e.value, e.std_error, exact(x)));
            values[k] = e.value;
            errors[k++] = e.std_error;
        }
        CHECK(testing::jointly_within(values[0], errors[0], values[1], errors[1]));
        CHECK(testing::jointly_within(values[0], errors[0], values[2], errors[2]));
        CHECK(testing::jointly_within(values[1], errors[1], values[2], errors[2]));
    }
}

TEST_CASE("superposition and antisymmetry of starts") {
    Rng rng = Rng::for_replica(47, 0);
    auto cm = testing::random_model(rng, 3);
    auto f = Observable::dense(testing::random_vector(rng, 3));
    BranchingOptions o;
    o.run = {40000, 47, 1};
    const double t = 0.5;
    auto ex = estimate_branching(cm.model, f, 0, t, o).estimate;
    auto ey = estimate_branching(cm.model, f, 2, t, o).estimate;
    o.run.seed = 48;
    auto both = estimate_branching(cm.model, f, config({{0, 1}, {2, 1}}, {}), t, o).estimate;
    CHECK(std::abs(both.value - ex.value - ey.value) <=
          3 * std::sqrt(both.std_error * both.std_error + ex.std_error * ex.std_error + ey.std_error * ey.std_error));
    auto anti = estimate_branching(cm.model, f, PairConfiguration::antiparticle_at(0), t, o).estimate;
    CHECK(testing::jointly_within(anti.value, anti.std_error, -ex.value, ex.std_error));

}

TEST_CASE("population cap aborts replicas") {
    auto m = RateModel::finite(StateSpace::finite({"a", "b"}), {{0, 1, -2.0}, {1, 0, -2.0}}, {0.0, 0.0});
    BranchingOptions o;
    o.cap = 1;
    o.run = {200, 1, 1};
    auto r = estimate_branching(m, Observable::constant(1.0), 0, 1.0, o);
    CHECK(r.estimate.aborted_replicas > 0);
    CHECK_FALSE(r.estimate.trusted());

    Rng rng = Rng::for_replica(1, 0);
    bool thrown = false;
    try {
        simulate_population(SplitRates(m), AnnihilationRate(0.0), PairConfiguration::particle_at(0), 5.0, 3, rng);
    } catch (const PopulationCapExceeded& e) {
        thrown = true;
        CHECK(e.cap() == 3);
        CHECK(e.population() > 3);
    }
    CHECK(thrown);
}

TEST_CASE("branching on a countable model") {
    auto space = StateSpace::countable("Z");
    auto walk = RateModel::countable(
        space,
        [](State x, std::vector<Transition>& out) {
            out.push_back({x + 1, 0.5});
            out.push_back({x - 1, -0.25});
        },
        [](State) { return 0.0; }, 0.75, 0.0);
    BranchingOptions o;
    o.run = {2000, 3, 1};
    o.audit = true;
    o.lambda = AnnihilationRate::infinite();
    auto r = estimate_branching(walk, Observable::constant(1.0), 0, 1.0, o);
    CHECK(r.estimate.value == 1.0);
    CHECK(r.audit_violations == 0);
    CHECK(r.audited_events > 0);
}
