#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace negrate {

// States are opaque ordered keys. Finite spaces use the index into the label
// list; countable built-ins use the integer lattice directly.
using State = std::int64_t;

// Particle (+1) or antiparticle (-1).
enum class Sign : int { particle = 1, antiparticle = -1 };

constexpr Sign flip(Sign s) noexcept {
    return s == Sign::particle ? Sign::antiparticle : Sign::particle;
}
constexpr double to_double(Sign s) noexcept { return static_cast<double>(static_cast<int>(s)); }

/// Violation of a rate-model invariant (self rates, bound M, unknown state, ...).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The exact oracle cannot meet the requested tolerance in double precision.
class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or malformed configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A branching replica exceeded its population cap and was aborted.
class PopulationCapExceeded : public std::runtime_error {
public:
    PopulationCapExceeded(std::uint64_t population, std::uint64_t cap)
        : std::runtime_error("population " + std::to_string(population) + " exceeds cap " +
                             std::to_string(cap)),
          population_(population), cap_(cap) {}
    std::uint64_t population() const noexcept { return population_; }
    std::uint64_t cap() const noexcept { return cap_; }

private:
    std::uint64_t population_;
    std::uint64_t cap_;
};

/// A statistic could not be formed because a sample class is empty.
class InsufficientSamples : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Monte Carlo (or exact) estimate of S_t f at one start state.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;  // 0 for the exact method
    std::uint64_t replicas = 0;
    std::uint64_t aborted_replicas = 0;
    std::uint64_t seed = 0;
    double elapsed = 0.0;  // wall seconds
    std::string method;
    double t = 0.0;

    bool trusted() const noexcept { return aborted_replicas == 0; }
};

/// Replica count, base seed and worker count shared by all estimators.
struct RunOptions {
    std::uint64_t replicas = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0 = hardware concurrency
};

}  // namespace negrate
