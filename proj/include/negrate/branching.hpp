#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include "negrate/configuration.hpp"
#include "negrate/core.hpp"
#include "negrate/rate_model.hpp"
#include "negrate/rng.hpp"

namespace negrate {

// Event kinds of the particle/antiparticle system. Configuration deltas:
//   plus_jump(x,y)    eta+ - d_x + d_y
//   minus_jump(x,y)   eta- - d_x + d_y
//   plus_branch(x,y)  eta+ + d_x, eta- + d_y
//   minus_branch(x,y) eta- + d_x, eta+ + d_y
//   plus_birth(x)     eta+ + d_x          plus_death(x)   eta+ - d_x
//   minus_birth(x)    eta- + d_x          minus_death(x)  eta- - d_x
//   annihilate(x)     eta+ - d_x, eta- - d_x
enum class EventKind : std::uint8_t {
    plus_jump,
    minus_jump,
    plus_branch,
    minus_branch,
    plus_birth,
    plus_death,
    minus_birth,
    minus_death,
    annihilate,
};
inline constexpr std::size_t kEventKindCount = 9;

std::string_view to_string(EventKind kind);

struct Event {
    EventKind kind;
    State site;   // x
    State other;  // y for jumps and branchings, otherwise equal to site
};

/// Applies the configuration delta of `e`. Throws ModelError when a removal
/// would make a count negative.
void apply_event(PairConfiguration& cfg, const Event& e);

/// Pair annihilation rate lambda in [0, inf]. Infinity removes co-located
/// pairs immediately after every event.
class AnnihilationRate {
public:
    explicit AnnihilationRate(double lambda = 0.0);
    static AnnihilationRate infinite() { return AnnihilationRate(std::numeric_limits<double>::infinity()); }

    bool is_infinite() const noexcept { return value_ == std::numeric_limits<double>::infinity(); }
    double value() const noexcept { return value_; }

private:
    double value_;
};

struct WeightedEvent {
    Event event;
    double rate;
};

/// Every enabled event of a configuration with its aggregate rate.
struct EventRateTable {
    std::vector<WeightedEvent> events;
    std::array<double, kEventKindCount> by_kind{};
    double total = 0.0;

    double rate(EventKind k) const noexcept { return by_kind[static_cast<std::size_t>(k)]; }
};

/// Aggregate rates: jumps r+(x,y) eta(x), branchings r-(x,y) eta(x), births
/// V+(x) eta(x), deaths V-(x) eta(x) for both species, annihilation
/// lambda eta+(x) eta-(x). With lambda = inf annihilation is instantaneous and
/// has no rate entry.
EventRateTable total_event_rates(const PairConfiguration& cfg, const SplitRates& split,
                                 AnnihilationRate lambda);

/// Called after every generator event (and after instant annihilation) with the
/// configuration reached.
using EventObserver = std::function<void(const Event&, const PairConfiguration&)>;

inline constexpr std::uint64_t kDefaultPopulationCap = 1'000'000;

/// Gillespie simulation of the branching (and annihilating) system up to time
/// t. Throws PopulationCapExceeded if eta+ + eta- ever exceeds `cap`.
PairConfiguration simulate_population(const SplitRates& split, AnnihilationRate lambda,
                                      const PairConfiguration& cfg0, double t, std::uint64_t cap,
                                      Rng& rng, const EventObserver* observer = nullptr);

struct BranchingOptions {
    AnnihilationRate lambda{0.0};
    std::uint64_t cap = kDefaultPopulationCap;
    RunOptions run;
    // Track every trajectory and count breaches of charge conservation (when
    // V = 0) and of the lambda = inf exclusion rule.
    bool audit = false;
};

struct BranchingEstimate {
    Estimate estimate;
    std::uint64_t audit_violations = 0;
    std::uint64_t audited_events = 0;
    std::uint64_t max_population = 0;
};

/// Estimate of sum_x (eta+_0(x) - eta-_0(x)) S_t f(x) as the mean of
/// f-lift(eta+_t, eta-_t). Aborted replicas are excluded from the mean and
/// counted; a nonzero count means the estimate is not trustworthy.
BranchingEstimate estimate_branching(const RateModel& model, const Observable& f,
                                     const PairConfiguration& cfg0, double t,
                                     const BranchingOptions& opts);

/// Started from a single particle at x0.
BranchingEstimate estimate_branching(const RateModel& model, const Observable& f, State x0,
                                     double t, const BranchingOptions& opts);

}  // namespace negrate
