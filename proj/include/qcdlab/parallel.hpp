#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace qcdlab {

/// Number of worker threads: hardware concurrency, capped by the
/// QCDLAB_THREADS environment variable when set.
inline unsigned thread_budget() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("QCDLAB_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && unsigned(cap) < n) n = unsigned(cap);
    }
    return n;
}

/// Runs fn(begin..end) split over contiguous index chunks. Chunk boundaries
/// depend only on (end - begin) and the thread budget, so any per-chunk
/// results merged in chunk order are reproducible.
inline void parallel_for(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    const std::size_t n = end > begin ? end - begin : 0;
    const unsigned workers = thread_budget();
    if (n == 0) return;
    if (workers <= 1 || n < 2 * workers) {
        fn(begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = begin + std::size_t(w) * chunk;
        if (lo >= end) break;
        const std::size_t hi = std::min(end, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

} // namespace qcdlab
