#include "negrate/configuration.hpp"

#include <algorithm>

namespace negrate {

void PairConfiguration::remove(Counts& counts, std::uint64_t& total, State x, std::uint64_t n) {
    if (n == 0) return;
    auto it = counts.find(x);
    if (it == counts.end() || it->second < n) {
        throw ModelError("cannot remove " + std::to_string(n) + " from site " + std::to_string(x));
    }
    it->second -= n;
    total -= n;
    if (it->second == 0) counts.erase(it);
}

std::uint64_t PairConfiguration::annihilate_all() {
    std::uint64_t removed = 0;
    for (auto it = plus_.begin(); it != plus_.end();) {
        auto jt = minus_.find(it->first);
        if (jt == minus_.end()) {
            ++it;
            continue;
        }
        const std::uint64_t pairs = std::min(it->second, jt->second);
        removed += pairs;
        total_plus_ -= pairs;
        total_minus_ -= pairs;
        jt->second -= pairs;
        if (jt->second == 0) minus_.erase(jt);
        it->second -= pairs;
        if (it->second == 0) {
            it = plus_.erase(it);
        } else {
            ++it;
        }
    }
    return removed;
}

std::uint64_t PairConfiguration::coincident_sites() const {
    std::uint64_t n = 0;
    for (const auto& [x, count] : plus_) {
        if (minus_.contains(x)) ++n;
    }
    return n;
}

}  // namespace negrate
