#pragma once

#include <cstdint>
#include <map>

#include "negrate/core.hpp"

namespace negrate {

/// Finitely supported counts of particles (eta+) and antiparticles (eta-) per site.
/// Zero counts are never stored.
class PairConfiguration {
public:
    using Counts = std::map<State, std::uint64_t>;

    PairConfiguration() = default;

    static PairConfiguration particle_at(State x) {
        PairConfiguration c;
        c.add_plus(x);
        return c;
    }
    static PairConfiguration antiparticle_at(State x) {
        PairConfiguration c;
        c.add_minus(x);
        return c;
    }

    void add_plus(State x, std::uint64_t n = 1) { add(plus_, total_plus_, x, n); }
    void add_minus(State x, std::uint64_t n = 1) { add(minus_, total_minus_, x, n); }
    void remove_plus(State x, std::uint64_t n = 1) { remove(plus_, total_plus_, x, n); }
    void remove_minus(State x, std::uint64_t n = 1) { remove(minus_, total_minus_, x, n); }

    std::uint64_t plus(State x) const { return lookup(plus_, x); }
    std::uint64_t minus(State x) const { return lookup(minus_, x); }
    const Counts& plus_counts() const noexcept { return plus_; }
    const Counts& minus_counts() const noexcept { return minus_; }

    std::uint64_t total_plus() const noexcept { return total_plus_; }
    std::uint64_t total_minus() const noexcept { return total_minus_; }
    std::uint64_t population() const noexcept { return total_plus_ + total_minus_; }
    /// totalPlus - totalMinus; conserved by the dynamics without potential.
    std::int64_t charge() const noexcept {
        return static_cast<std::int64_t>(total_plus_) - static_cast<std::int64_t>(total_minus_);
    }
    bool empty() const noexcept { return population() == 0; }

    /// Same configuration with particles and antiparticles exchanged.
    PairConfiguration swapped() const {
        PairConfiguration c;
        c.plus_ = minus_;
        c.minus_ = plus_;
        c.total_plus_ = total_minus_;
        c.total_minus_ = total_plus_;
        return c;
    }

    /// Removes min(eta+(x), eta-(x)) pairs at every site; returns pairs removed.
    std::uint64_t annihilate_all();

    /// Number of sites holding both a particle and an antiparticle.
    std::uint64_t coincident_sites() const;

    friend bool operator==(const PairConfiguration& a, const PairConfiguration& b) {
        return a.plus_ == b.plus_ && a.minus_ == b.minus_;
    }

private:
    static void add(Counts& counts, std::uint64_t& total, State x, std::uint64_t n) {
        if (n == 0) return;
        counts[x] += n;
        total += n;
    }
    static void remove(Counts& counts, std::uint64_t& total, State x, std::uint64_t n);
    static std::uint64_t lookup(const Counts& counts, State x) {
        auto it = counts.find(x);
        return it == counts.end() ? 0 : it->second;
    }

    Counts plus_;
    Counts minus_;
    std::uint64_t total_plus_ = 0;
    std::uint64_t total_minus_ = 0;
};

}  // namespace negrate
