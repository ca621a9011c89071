#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <string_view>
#include <vector>

#include "gdo/error.hpp"
#include "gdo/parallel.hpp"
#include "gdo/sample.hpp"

namespace gdo {

/// A scored record reference. `id` views into the pool, which must outlive it.
struct Candidate {
    double rho = 0.0;
    std::string_view id;
    std::size_t index = 0;
};

/// Selection order used everywhere: higher rho first, then smaller id.
inline bool ranks_before(const Candidate& a, const Candidate& b) noexcept {
    if (a.rho != b.rho) return a.rho > b.rho;
    return a.id < b.id;
}

inline Candidate candidate(const Pool& pool, std::size_t i) {
    const auto& r = pool[i];
    if (!r.rho) throw Error("sample '" + r.id + "' is not scored");
    return {*r.rho, r.id, i};
}

/// Bounded buffer keeping the best `capacity` candidates seen so far.
class TopKBuffer {
public:
    explicit TopKBuffer(std::size_t capacity = 1) : capacity_(capacity) {
        if (capacity_ < 1) throw ConfigError("reservoir capacity must be >= 1");
    }

    /// Returns true if c is currently retained.
    bool push(const Candidate& c) {
        if (heap_.size() < capacity_) {
            heap_.push_back(c);
            std::push_heap(heap_.begin(), heap_.end(), ranks_before);
            return true;
        }
        // heap front is the worst retained candidate
        if (!ranks_before(c, heap_.front())) return false;
        std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
        heap_.back() = c;
        std::push_heap(heap_.begin(), heap_.end(), ranks_before);
        return true;
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return heap_.size(); }

    /// Retained candidates, best first.
    std::vector<Candidate> sorted() const {
        auto v = heap_;
        std::sort(v.begin(), v.end(), ranks_before);
        return v;
    }

private:
    std::size_t capacity_;
    std::vector<Candidate> heap_;
};

using Reservoirs = std::map<StratumKey, std::vector<Candidate>>;
using CapacityFn = std::function<std::size_t(const StratumKey&)>;

/// Per-stratum top-k in one pass over the pool. Workers split the pool into
/// chunks and the partial buffers are merged; since the order is total the
/// result does not depend on the worker count.
inline Reservoirs fill_reservoirs(const Pool& pool, const CapacityFn& capacity, unsigned workers = 1) {
    const std::size_t nchunks = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(pool.size(), 1))));
    const std::size_t chunk = (pool.size() + nchunks - 1) / nchunks;
    std::vector<std::map<StratumKey, TopKBuffer>> partial(nchunks);
    parallel_for(nchunks, workers, [&](std::size_t c) {
        auto& mine = partial[c];
        const std::size_t lo = c * chunk;
        const std::size_t hi = std::min(pool.size(), lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& key = pool[i].strata;
            auto it = mine.find(key);
            if (it == mine.end()) it = mine.emplace(key, TopKBuffer(capacity(key))).first;
            it->second.push(candidate(pool, i));
        }
    });
    std::map<StratumKey, TopKBuffer> merged;
    for (auto& part : partial)
        for (auto& [key, buf] : part) {
            auto it = merged.find(key);
            if (it == merged.end()) it = merged.emplace(key, TopKBuffer(buf.capacity())).first;
            for (const auto& c : buf.sorted()) it->second.push(c);
        }
    Reservoirs out;
    for (auto& [key, buf] : merged) out.emplace(key, buf.sorted());
    return out;
}

inline Reservoirs fill_reservoirs(const Pool& pool, std::size_t k, unsigned workers = 1) {
    if (k < 1) throw ConfigError("reservoir capacity must be >= 1");
    return fill_reservoirs(pool, [k](const StratumKey&) { return k; }, workers);
}

} // namespace gdo
