#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gdo {

/// Runs fn(i) for i in [0, n) on up to `workers` threads using contiguous
/// chunks. fn must only write to slot i of any shared output. The first
/// exception thrown by any worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(workers, n);
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    std::vector<std::exception_ptr> errors(nthreads);
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        threads.emplace_back([&, t, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace gdo
