#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace bloch {

// Process-wide worker count, settable from the CLI (--jobs).
int worker_count();
void set_worker_count(int jobs);

// Deterministic parallel map: fn(i) for i in [0, n), workers striding over
// disjoint indices. Results must be written to preallocated slots.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    const int jobs = std::min(worker_count(), n);
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += jobs) fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace bloch
