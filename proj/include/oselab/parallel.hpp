#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace oselab {

/// Index-parallel map with deterministic output: workers pull indices from a
/// shared counter and write into caller-owned slots, so results are identical
/// for any worker count.
inline void parallel_for(long count, int threads, const std::function<void(long)>& body) {
    if (threads <= 1 || count <= 1) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    int workers = std::min<long>(threads, count);
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace oselab
