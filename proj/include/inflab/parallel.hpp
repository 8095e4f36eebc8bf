#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace inflab {

/// Worker cap: INFLAB_THREADS if set (>0), otherwise hardware concurrency.
inline int thread_count() {
    static const int cached = [] {
        int hw = static_cast<int>(std::thread::hardware_concurrency());
        if (hw <= 0) hw = 1;
        if (const char* env = std::getenv("INFLAB_THREADS")) {
            const int req = std::atoi(env);
            if (req > 0) return std::min(req, 64);
        }
        return hw;
    }();
    return cached;
}

/// Static block split of [begin,end) over the worker pool. The split depends
/// only on the range, never on the worker count; each index is touched by
/// exactly one worker, so any fn writing only to its own index is
/// reproducible regardless of parallelism.
template <typename Fn>
void parallel_for(long begin, long end, Fn&& fn) {
    const long n = end - begin;
    if (n <= 0) return;
    const int workers = std::min<long>(thread_count(), n);
    if (workers <= 1 || n < 4096) {
        for (long i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long lo = begin + w * chunk;
        const long hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace inflab
