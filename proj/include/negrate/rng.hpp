#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace negrate {

// splitmix64 finalizer, used only to expand seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ generator. Cheap to seed, so every replica gets its own stream.
/// Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    /// Stream for replica `index` of a run with base seed `seed`; independent of
    /// execution order.
    static Rng for_replica(std::uint64_t seed, std::uint64_t index) noexcept {
        std::uint64_t sm = seed;
        std::uint64_t a = splitmix64(sm);
        std::uint64_t sm2 = index ^ 0x6a09e667f3bcc909ULL;
        std::uint64_t b = splitmix64(sm2);
        return Rng(a ^ (b * 0xd1342543de82ef95ULL) ^ index);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Exponential holding time with the given (positive) rate.
    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace negrate
