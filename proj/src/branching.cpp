#include "negrate/branching.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "negrate/replicas.hpp"

namespace negrate {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::plus_jump: return "plus_jump";
        case EventKind::minus_jump: return "minus_jump";
        case EventKind::plus_branch: return "plus_branch";
        case EventKind::minus_branch: return "minus_branch";
        case EventKind::plus_birth: return "plus_birth";
        case EventKind::plus_death: return "plus_death";
        case EventKind::minus_birth: return "minus_birth";
        case EventKind::minus_death: return "minus_death";
        case EventKind::annihilate: return "annihilate";
    }
    return "unknown";
}

void apply_event(PairConfiguration& cfg, const Event& e) {
    switch (e.kind) {
        case EventKind::plus_jump:
            cfg.remove_plus(e.site);
            cfg.add_plus(e.other);
            break;
        case EventKind::minus_jump:
            cfg.remove_minus(e.site);
            cfg.add_minus(e.other);
            break;
        case EventKind::plus_branch:
            cfg.add_plus(e.site);
            cfg.add_minus(e.other);
            break;
        case EventKind::minus_branch:
            cfg.add_minus(e.site);
            cfg.add_plus(e.other);
            break;
        case EventKind::plus_birth: cfg.add_plus(e.site); break;
        case EventKind::plus_death: cfg.remove_plus(e.site); break;
        case EventKind::minus_birth: cfg.add_minus(e.site); break;
        case EventKind::minus_death: cfg.remove_minus(e.site); break;
        case EventKind::annihilate:
            cfg.remove_plus(e.site);
            cfg.remove_minus(e.site);
            break;
    }
}

AnnihilationRate::AnnihilationRate(double lambda) : value_(lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("annihilation rate must be in [0, inf]");
}

EventRateTable total_event_rates(const PairConfiguration& cfg, const SplitRates& split,
                                 AnnihilationRate lambda) {
    EventRateTable table;
    const RateModel& model = split.model();
    SplitRow scratch;
    auto add = [&](EventKind k, State x, State y, double rate) {
        if (rate <= 0.0) return;
        table.events.push_back({{k, x, y}, rate});
        table.by_kind[static_cast<std::size_t>(k)] += rate;
        table.total += rate;
    };
    auto species = [&](State x, double count, bool particle) {
        const auto row = split.row(x, scratch);
        const double v = model.potential(x);
        for (std::size_t k = 0; k < row.targets.size(); ++k) {
            const State y = row.targets[k];
            add(particle ? EventKind::plus_jump : EventKind::minus_jump, x, y, row.plus[k] * count);
            add(particle ? EventKind::plus_branch : EventKind::minus_branch, x, y, row.minus[k] * count);
        }
        add(particle ? EventKind::plus_birth : EventKind::minus_birth, x, x, std::max(v, 0.0) * count);
        add(particle ? EventKind::plus_death : EventKind::minus_death, x, x, std::max(-v, 0.0) * count);
    };
    for (const auto& [x, n] : cfg.plus_counts()) species(x, static_cast<double>(n), true);
    for (const auto& [x, n] : cfg.minus_counts()) species(x, static_cast<double>(n), false);
    if (!lambda.is_infinite() && lambda.value() > 0.0) {
        for (const auto& [x, n] : cfg.plus_counts()) {
            const auto m = cfg.minus(x);
            if (m > 0) {
                add(EventKind::annihilate, x, x,
                    lambda.value() * static_cast<double>(n) * static_cast<double>(m));
            }
        }
    }
    return table;
}

namespace {

// Complete binary tree of partial sums over site slots. Parents are recomputed
// from children on every update, so the total never drifts.
class SumTree {
public:
    void ensure_capacity(std::size_t n) {
        if (n <= capacity_) return;
        std::size_t cap = std::max<std::size_t>(capacity_, 1);
        while (cap < n) cap *= 2;
        std::vector<double> leaves(cap, 0.0);
        for (std::size_t i = 0; i < capacity_; ++i) leaves[i] = nodes_[capacity_ + i];
        capacity_ = cap;
        nodes_.assign(2 * cap, 0.0);
        for (std::size_t i = 0; i < cap; ++i) nodes_[cap + i] = leaves[i];
        for (std::size_t p = cap; p-- > 1;) nodes_[p] = nodes_[2 * p] + nodes_[2 * p + 1];
    }
    void set(std::size_t i, double v) {
        std::size_t p = capacity_ + i;
        nodes_[p] = v;
        for (p >>= 1; p >= 1; p >>= 1) nodes_[p] = nodes_[2 * p] + nodes_[2 * p + 1];
    }
    double total() const { return capacity_ == 0 ? 0.0 : nodes_[1]; }

    /// Leaf containing u in [0, total); u becomes the offset within that leaf.
    std::size_t find(double& u) const {
        std::size_t p = 1;
        while (p < capacity_) {
            const std::size_t l = 2 * p;
            if (u < nodes_[l] || nodes_[l + 1] == 0.0) {
                p = l;
            } else {
                u -= nodes_[l];
                p = l + 1;
            }
        }
        const std::size_t i = p - capacity_;
        u = std::min(std::max(u, 0.0), nodes_[p]);
        return i;
    }

private:
    std::size_t capacity_ = 0;
    std::vector<double> nodes_;
};

enum class Action { jump, branch, birth, death };

struct IndividualPick {
    Action action;
    State target;
};

// Picks what one individual at a site does, given u in [0, exit rate).
IndividualPick pick_individual(const SplitRowView& row, double v_plus, double v_minus, double u) {
    for (std::size_t k = 0; k < row.targets.size(); ++k) {
        if (u < row.plus[k]) return {Action::jump, row.targets[k]};
        u -= row.plus[k];
    }
    for (std::size_t k = 0; k < row.targets.size(); ++k) {
        if (u < row.minus[k]) return {Action::branch, row.targets[k]};
        u -= row.minus[k];
    }
    if (u < v_plus) return {Action::birth, 0};
    u -= v_plus;
    if (u < v_minus || v_minus > 0.0) return {Action::death, 0};
    if (v_plus > 0.0) return {Action::birth, 0};
    for (std::size_t k = row.targets.size(); k-- > 0;) {
        if (row.minus[k] > 0.0) return {Action::branch, row.targets[k]};
        if (row.plus[k] > 0.0) return {Action::jump, row.targets[k]};
    }
    throw ModelError("event requested at a site without enabled events");
}

/// Replica-reusable simulator state. Site rows are cached across replicas.
class PopulationSimulator {
public:
    PopulationSimulator(const SplitRates& split, AnnihilationRate lambda, std::uint64_t cap)
        : split_(split), model_(split.model()), lambda_(lambda), cap_(cap) {
        if (model_.is_finite()) {
            const std::size_t n = model_.space().size();
            for (std::size_t i = 0; i < n; ++i) new_site(static_cast<State>(i));
        }
    }

    void run(const PairConfiguration& cfg0, double t, Rng& rng, const EventObserver* observer) {
        reset();
        if (cfg0.population() > cap_) {
            throw ConfigError("population cap " + std::to_string(cap_) +
                              " is below the initial population " + std::to_string(cfg0.population()));
        }
        for (const auto& [x, n] : cfg0.plus_counts()) {
            const std::size_t s = slot(x);
            sites_[s].plus += n;
            population_ += n;
            touch(s);
        }
        for (const auto& [x, n] : cfg0.minus_counts()) {
            const std::size_t s = slot(x);
            sites_[s].minus += n;
            population_ += n;
            touch(s);
        }
        if (lambda_.is_infinite()) {
            for (std::size_t s : touched_) annihilate_instantly(s);
        }
        for (std::size_t s : touched_) refresh(s);
        max_population_ = std::max(max_population_, population_);

        double clock = 0.0;
        for (;;) {
            const double total = tree_.total();
            if (!(total > 0.0)) break;
            clock += rng.exponential(total);
            if (clock >= t) break;
            double u = rng.uniform() * total;
            const std::size_t s = tree_.find(u);
            const Event e = choose_event(s, u);
            apply(e);
            if (observer) (*observer)(e, configuration());
        }
    }

    double lift(const Observable& f) const {
        double acc = 0.0;
        for (std::size_t s : touched_) {
            const Site& site = sites_[s];
            if (site.plus != site.minus) {
                acc += (static_cast<double>(site.plus) - static_cast<double>(site.minus)) * f(site.x);
            }
        }
        return acc;
    }

    PairConfiguration configuration() const {
        PairConfiguration c;
        for (std::size_t s : touched_) {
            c.add_plus(sites_[s].x, sites_[s].plus);
            c.add_minus(sites_[s].x, sites_[s].minus);
        }
        return c;
    }

    std::uint64_t max_population() const noexcept { return max_population_; }

private:
    struct Site {
        State x;
        std::uint64_t plus = 0;
        std::uint64_t minus = 0;
        SplitRowView row;
        double v_plus = 0.0;
        double v_minus = 0.0;
        double exit_rate = 0.0;  // R+ + R- + V+ + V-
        bool touched = false;
    };

    std::size_t new_site(State x) {
        SplitRowView view;
        if (model_.is_finite()) {
            view = split_.row(x, scratch_);
        } else {
            row_storage_.emplace_back();
            split_.row(x, row_storage_.back());
            view = row_storage_.back().view();
        }
        const double v = model_.potential(x);
        Site site{x};
        site.row = view;
        site.v_plus = std::max(v, 0.0);
        site.v_minus = std::max(-v, 0.0);
        site.exit_rate = view.row_plus + view.row_minus + site.v_plus + site.v_minus;
        sites_.push_back(site);
        tree_.ensure_capacity(sites_.size());
        const std::size_t s = sites_.size() - 1;
        if (!model_.is_finite()) slot_of_.emplace(x, s);
        return s;
    }

    std::size_t slot(State x) {
        if (model_.is_finite()) {
            if (!model_.space().contains(x)) throw ModelError("state " + std::to_string(x) + " not in space");
            return static_cast<std::size_t>(x);
        }
        auto it = slot_of_.find(x);
        if (it != slot_of_.end()) return it->second;
        return new_site(x);
    }

    void touch(std::size_t s) {
        if (!sites_[s].touched) {
            sites_[s].touched = true;
            touched_.push_back(s);
        }
    }

    void reset() {
        for (std::size_t s : touched_) {
            sites_[s].plus = 0;
            sites_[s].minus = 0;
            sites_[s].touched = false;
            tree_.set(s, 0.0);
        }
        touched_.clear();
        population_ = 0;
        max_population_ = 0;
    }

    void refresh(std::size_t s) {
        const Site& site = sites_[s];
        const double p = static_cast<double>(site.plus);
        const double m = static_cast<double>(site.minus);
        double rate = site.exit_rate * (p + m);
        if (!lambda_.is_infinite()) rate += lambda_.value() * p * m;
        tree_.set(s, rate);
    }

    void annihilate_instantly(std::size_t s) {
        Site& site = sites_[s];
        const std::uint64_t pairs = std::min(site.plus, site.minus);
        site.plus -= pairs;
        site.minus -= pairs;
        population_ -= 2 * pairs;
    }

    Event choose_event(std::size_t s, double u) const {
        const Site& site = sites_[s];
        const double p = static_cast<double>(site.plus);
        const double m = static_cast<double>(site.minus);
        const double particle_part = site.exit_rate * p;
        const double anti_part = site.exit_rate * m;
        bool particle;
        double within;
        if (site.plus > 0 && u < particle_part) {
            particle = true;
            within = u / p;
        } else if (site.minus > 0 && u - particle_part < anti_part) {
            particle = false;
            within = (u - particle_part) / m;
        } else if (!lambda_.is_infinite() && lambda_.value() > 0.0 && site.plus > 0 && site.minus > 0) {
            return {EventKind::annihilate, site.x, site.x};
        } else {
            // Rounding pushed u past the individual events.
            particle = site.minus == 0;
            within = site.exit_rate;
        }
        const auto pick = pick_individual(site.row, site.v_plus, site.v_minus, within);
        switch (pick.action) {
            case Action::jump:
                return {particle ? EventKind::plus_jump : EventKind::minus_jump, site.x, pick.target};
            case Action::branch:
                return {particle ? EventKind::plus_branch : EventKind::minus_branch, site.x, pick.target};
            case Action::birth:
                return {particle ? EventKind::plus_birth : EventKind::minus_birth, site.x, site.x};
            case Action::death:
                return {particle ? EventKind::plus_death : EventKind::minus_death, site.x, site.x};
        }
        throw ModelError("unreachable event selection");
    }

    void apply(const Event& e) {
        const std::size_t a = slot(e.site);
        std::size_t b = a;
        // Only the cases that never add a site may hold this reference.
        auto& sa = sites_[a];
        switch (e.kind) {
            case EventKind::plus_jump:
                b = slot(e.other);
                --sites_[a].plus;
                ++sites_[b].plus;
                break;
            case EventKind::minus_jump:
                b = slot(e.other);
                --sites_[a].minus;
                ++sites_[b].minus;
                break;
            case EventKind::plus_branch:
                b = slot(e.other);
                ++sites_[a].plus;
                ++sites_[b].minus;
                population_ += 2;
                break;
            case EventKind::minus_branch:
                b = slot(e.other);
                ++sites_[a].minus;
                ++sites_[b].plus;
                population_ += 2;
                break;
            case EventKind::plus_birth:
                ++sa.plus;
                ++population_;
                break;
            case EventKind::plus_death:
                --sa.plus;
                --population_;
                break;
            case EventKind::minus_birth:
                ++sa.minus;
                ++population_;
                break;
            case EventKind::minus_death:
                --sa.minus;
                --population_;
                break;
            case EventKind::annihilate:
                --sa.plus;
                --sa.minus;
                population_ -= 2;
                break;
        }
        touch(a);
        touch(b);
        if (lambda_.is_infinite()) {
            annihilate_instantly(a);
            if (b != a) annihilate_instantly(b);
        }
        refresh(a);
        if (b != a) refresh(b);
        max_population_ = std::max(max_population_, population_);
        if (population_ > cap_) throw PopulationCapExceeded(population_, cap_);
    }

    const SplitRates& split_;
    const RateModel& model_;
    AnnihilationRate lambda_;
    std::uint64_t cap_;
    SplitRow scratch_;
    std::deque<SplitRow> row_storage_;
    std::vector<Site> sites_;
    std::unordered_map<State, std::size_t> slot_of_;
    std::vector<std::size_t> touched_;
    SumTree tree_;
    std::uint64_t population_ = 0;
    std::uint64_t max_population_ = 0;
};

}  // namespace

PairConfiguration simulate_population(const SplitRates& split, AnnihilationRate lambda,
                                      const PairConfiguration& cfg0, double t, std::uint64_t cap,
                                      Rng& rng, const EventObserver* observer) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("population horizon must be finite and >= 0");
    PopulationSimulator sim(split, lambda, cap);
    sim.run(cfg0, t, rng, observer);
    return sim.configuration();
}

BranchingEstimate estimate_branching(const RateModel& model, const Observable& f,
                                     const PairConfiguration& cfg0, double t,
                                     const BranchingOptions& opts) {
    if (opts.run.replicas < 2) throw ConfigError("estimate_branching needs at least 2 replicas");
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("population horizon must be finite and >= 0");
    if (cfg0.population() > opts.cap) {
        throw ConfigError("population cap is below the initial population");
    }
    const auto started = std::chrono::steady_clock::now();
    const SplitRates split(model);
    const std::uint64_t n = opts.run.replicas;
    std::vector<double> values(n, 0.0);
    std::vector<std::uint8_t> aborted(n, 0);
    std::vector<std::uint64_t> violations(n, 0);
    std::vector<std::uint64_t> events(n, 0);
    std::vector<std::uint64_t> peaks(n, 0);
    const bool check_charge = model.potential_free();
    const std::int64_t charge0 = cfg0.charge();

    struct Worker {
        PopulationSimulator sim;
    };
    for_each_replica(
        n, opts.run.workers, [&] { return Worker{PopulationSimulator(split, opts.lambda, opts.cap)}; },
        [&](Worker& w, std::uint64_t i) {
            Rng rng = Rng::for_replica(opts.run.seed, i);
            EventObserver audit = [&](const Event&, const PairConfiguration& cfg) {
                ++events[i];
                if (check_charge && cfg.charge() != charge0) ++violations[i];
                if (opts.lambda.is_infinite() && cfg.coincident_sites() != 0) ++violations[i];
            };
            try {
                w.sim.run(cfg0, t, rng, opts.audit ? &audit : nullptr);
                values[i] = w.sim.lift(f);
            } catch (const PopulationCapExceeded&) {
                aborted[i] = 1;
            }
            peaks[i] = w.sim.max_population();
        });

    std::vector<double> kept;
    kept.reserve(n);
    BranchingEstimate out;
    for (std::uint64_t i = 0; i < n; ++i) {
        if (aborted[i]) {
            ++out.estimate.aborted_replicas;
        } else {
            kept.push_back(values[i]);
        }
        out.audit_violations += violations[i];
        out.audited_events += events[i];
        out.max_population = std::max(out.max_population, peaks[i]);
    }
    const auto s = summarize(kept);
    out.estimate.value = kept.empty() ? std::nan("") : s.mean;
    out.estimate.std_error = s.std_error;
    out.estimate.replicas = n;
    out.estimate.seed = opts.run.seed;
    out.estimate.method = "branching";
    out.estimate.t = t;
    out.estimate.elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

BranchingEstimate estimate_branching(const RateModel& model, const Observable& f, State x0,
                                     double t, const BranchingOptions& opts) {
    return estimate_branching(model, f, PairConfiguration::particle_at(x0), t, opts);
}

}  // namespace negrate
