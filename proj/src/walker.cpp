#include "negrate/walker.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "negrate/replicas.hpp"

namespace negrate {

double log_weight_of(std::span<const HoldingInterval> intervals) {
    if (intervals.empty()) return 0.0;
    double log_weight = 0.0;
    double seg_start = intervals.front().start;
    double seg_rate = intervals.front().rate;
    for (const auto& iv : intervals.subspan(1)) {
        if (iv.rate != seg_rate) {
            log_weight += seg_rate * (iv.start - seg_start);
            seg_start = iv.start;
            seg_rate = iv.rate;
        }
    }
    return log_weight + seg_rate * (intervals.back().end - seg_start);
}

namespace {

struct Pick {
    State target;
    bool flips;
};

// Target with probability r+(x,y)/q (sign kept) or r-(x,y)/q (sign flipped).
Pick pick_jump(const SplitRowView& row, double u) {
    for (std::size_t k = 0; k < row.targets.size(); ++k) {
        if (u < row.plus[k]) return {row.targets[k], false};
        u -= row.plus[k];
    }
    for (std::size_t k = 0; k < row.targets.size(); ++k) {
        if (u < row.minus[k]) return {row.targets[k], true};
        u -= row.minus[k];
    }
    // u landed past the last entry through rounding: take the last nonzero rate.
    for (std::size_t k = row.targets.size(); k-- > 0;) {
        if (row.minus[k] > 0.0) return {row.targets[k], true};
    }
    for (std::size_t k = row.targets.size(); k-- > 0;) {
        if (row.plus[k] > 0.0) return {row.targets[k], false};
    }
    throw ModelError("jump requested from a state without outgoing rates");
}

}  // namespace

WalkerOutcome simulate_walker(const SplitRates& split, State x0, double t, Rng& rng,
                              std::vector<HoldingInterval>* log) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("walker horizon must be finite and >= 0");
    const RateModel& model = split.model();
    SplitRow scratch;
    WalkerOutcome out;
    State x = x0;
    Sign sign = Sign::particle;
    SplitRowView row = split.row(x, scratch);
    double rate = 2.0 * row.row_minus + model.potential(x);
    double clock = 0.0;
    double seg_start = 0.0;
    double seg_rate = rate;
    double log_weight = 0.0;

    for (;;) {
        const double q = row.row_plus + row.row_minus;
        // q = 0: the walker holds at x until t.
        const double next = q > 0.0 ? clock + rng.exponential(q) : std::numeric_limits<double>::infinity();
        if (next >= t) {
            if (log) log->push_back({x, clock, t, rate});
            break;
        }
        if (log) log->push_back({x, clock, next, rate});
        clock = next;
        const Pick pick = pick_jump(row, rng.uniform() * q);
        x = pick.target;
        ++out.jumps;
        if (pick.flips) {
            sign = flip(sign);
            ++out.jumps_minus;
        }
        row = split.row(x, scratch);
        rate = 2.0 * row.row_minus + model.potential(x);
        if (rate != seg_rate) {
            log_weight += seg_rate * (clock - seg_start);
            seg_start = clock;
            seg_rate = rate;
        }
    }
    log_weight += seg_rate * (t - seg_start);
    out.state = {x, sign, log_weight, t};
    return out;
}

double WalkerSample::value(double f_at_position) const {
    return to_double(sign) * f_at_position * std::exp(log_weight);
}

std::vector<WalkerSample> sample_walkers(const SplitRates& split, State x0, double t,
                                         const RunOptions& opts) {
    std::vector<WalkerSample> samples(opts.replicas);
    for_each_replica(
        opts.replicas, opts.workers, [] { return 0; },
        [&](int, std::uint64_t i) {
            Rng rng = Rng::for_replica(opts.seed, i);
            const auto o = simulate_walker(split, x0, t, rng);
            samples[i] = {o.state.position, o.state.sign, o.state.log_weight, o.jumps, o.jumps_minus};
        });
    return samples;
}

Estimate estimate_single(const RateModel& model, const Observable& f, State x0, double t,
                         const RunOptions& opts) {
    if (opts.replicas < 2) throw ConfigError("estimate_single needs at least 2 replicas");
    const auto started = std::chrono::steady_clock::now();
    const SplitRates split(model);
    const auto samples = sample_walkers(split, x0, t, opts);
    std::vector<double> values(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) values[i] = samples[i].value(f(samples[i].position));
    const auto s = summarize(values);

    Estimate e;
    e.value = s.mean;
    e.std_error = s.std_error;
    e.replicas = opts.replicas;
    e.seed = opts.seed;
    e.method = "single";
    e.t = t;
    e.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return e;
}

}  // namespace negrate
