// parallel.hpp — deterministic worker parallelism.
//
// Work over [0, n) is split into 16 fixed contiguous buckets regardless of
// the worker count, and workers own whole buckets. Callers write results by
// index (or reduce in bucket order), so output is bit-identical whether one
// thread runs or sixteen. QTLC_THREADS caps the worker count.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace qtlc {

inline constexpr std::size_t kParallelBuckets = 16;

inline std::size_t worker_thread_cap() {
    std::size_t cap = std::thread::hardware_concurrency();
    if (cap == 0) cap = 1;
    if (const char* env = std::getenv("QTLC_THREADS")) {
        try {
            const long parsed = std::stol(env);
            if (parsed >= 1) cap = static_cast<std::size_t>(parsed);
        } catch (...) {
            // unparsable value: keep the hardware default
        }
    }
    return cap;
}

/// Run fn(i) for every i in [0, n). fn must only touch state owned by index
/// i. Bucket b covers [n*b/16, n*(b+1)/16); worker t takes buckets t, t+T,
/// t+2T, ...
template <typename Fn>
inline void parallel_for_index(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    const std::size_t workers =
        std::min({worker_thread_cap(), kParallelBuckets, n});
    auto run_buckets = [&](std::size_t worker) {
        for (std::size_t b = worker; b < kParallelBuckets; b += workers) {
            const std::size_t begin = n * b / kParallelBuckets;
            const std::size_t end = n * (b + 1) / kParallelBuckets;
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }
    };
    if (workers <= 1) {
        run_buckets(0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) {
        pool.emplace_back(run_buckets, t);
    }
    run_buckets(0);
    for (std::thread& th : pool) th.join();
}

}  // namespace qtlc
