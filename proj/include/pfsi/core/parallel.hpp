#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace pfsi {

/// Kernel parallelism cap: PFSI_THREADS (default 1, i.e. serial).
inline int max_threads() {
    static int cached = [] {
        const char* env = std::getenv("PFSI_THREADS");
        if (!env) return 1;
        int n = std::atoi(env);
        return n > 0 ? n : 1;
    }();
    return cached;
}

/// Static-chunk parallel loop over [0, n); results must be written to
/// disjoint slots so the outcome is independent of the schedule.
template <typename F>
void parallel_for(int n, F&& f) {
    int nt = std::min(max_threads(), n);
    if (nt <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([=, &f] {
            for (int i = t; i < n; i += nt) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace pfsi
