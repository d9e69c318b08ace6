#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "negrate/core.hpp"
#include "negrate/rate_model.hpp"
#include "negrate/rng.hpp"

namespace negrate {

/// Single walker (X_t, Z_t) on E x {-1, +1}. Moves with r+ keeping its sign and
/// with r- flipping it; carries log of the Feynman-Kac weight
/// exp(int_0^t 2 R-(X_u) + V(X_u) du).
struct WalkerState {
    State position = 0;
    Sign sign = Sign::particle;
    double log_weight = 0.0;
    double clock = 0.0;
};

struct WalkerOutcome {
    WalkerState state;
    std::uint64_t jumps = 0;
    std::uint64_t jumps_minus = 0;  // sign-flipping jumps
};

/// One holding interval of a trajectory; `rate` is 2 R-(state) + V(state).
struct HoldingInterval {
    State state;
    double start;
    double end;
    double rate;
};

/// Log weight of a trajectory from its holding intervals. Consecutive intervals
/// with an identical rate are integrated as one segment, so a homogeneous
/// model yields exactly rate * t.
double log_weight_of(std::span<const HoldingInterval> intervals);

/// Event-driven simulation of the walker from (x0, +1) up to time t. No time
/// discretization; the weight integral is exact. Appends the holding intervals
/// to `log` when non-null.
WalkerOutcome simulate_walker(const SplitRates& split, State x0, double t, Rng& rng,
                              std::vector<HoldingInterval>* log = nullptr);

/// Final walker state of one replica, as used by every estimator built on the
/// signed-walker representation.
struct WalkerSample {
    State position;
    Sign sign;
    double log_weight;
    std::uint64_t jumps;
    std::uint64_t jumps_minus;

    /// Z_t f(X_t) exp(logWeight).
    double value(double f_at_position) const;
};

/// Runs `opts.replicas` independent walkers; sample i uses stream (seed, i).
std::vector<WalkerSample> sample_walkers(const SplitRates& split, State x0, double t,
                                         const RunOptions& opts);

/// Estimate of S_t f(x0) = E_{x0,+1}[Z_t f(X_t) exp(int 2R- + V)].
Estimate estimate_single(const RateModel& model, const Observable& f, State x0, double t,
                         const RunOptions& opts);

}  // namespace negrate
