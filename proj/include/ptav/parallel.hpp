#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace ptav {

// Worker budget for internal parallel loops; PTAV_THREADS caps it.
inline int thread_budget() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("PTAV_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < hw) hw = cap;
    }
    return hw;
}

// Runs fn(i) for i in [0, n) on up to thread_budget() threads. The work
// partition is by contiguous index blocks, so results written to per-index
// slots are identical regardless of the thread count.
inline void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    const int workers = thread_budget();
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const size_t chunks = std::min<size_t>(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(chunks);
    for (size_t t = 0; t < chunks; ++t) {
        const size_t lo = n * t / chunks;
        const size_t hi = n * (t + 1) / chunks;
        threads.emplace_back([lo, hi, &fn]() {
            for (size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : threads) th.join();
}

}  // namespace ptav
