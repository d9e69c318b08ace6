#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace negrate {

struct SampleSummary {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t count = 0;
};

/// Mean and standard error of the mean, accumulated in index order. Deviations
/// are taken from the first sample, so a constant sample has an exact mean.
inline SampleSummary summarize(std::span<const double> xs) {
    SampleSummary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    const double shift = xs.front();
    double sum = 0.0;
    for (double x : xs) sum += x - shift;
    s.mean = shift + sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return s;
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    return s;
}

inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `body(worker_state, index)` for every replica index in [0, count).
/// Each worker owns one state made by `make_state()`. Indices are handed out in
/// chunks, so results must be written by index to stay order independent.
template <class MakeState, class Body>
void for_each_replica(std::uint64_t count, unsigned workers, MakeState&& make_state, Body&& body) {
    workers = resolve_workers(workers);
    if (workers == 1 || count < 2) {
        auto state = make_state();
        for (std::uint64_t i = 0; i < count; ++i) body(state, i);
        return;
    }
    constexpr std::uint64_t kChunk = 256;
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                auto state = make_state();
                for (;;) {
                    const std::uint64_t begin = next.fetch_add(kChunk);
                    if (begin >= count) break;
                    const std::uint64_t end = std::min(count, begin + kChunk);
                    for (std::uint64_t i = begin; i < end; ++i) body(state, i);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace negrate
