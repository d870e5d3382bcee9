#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace pinnse {

/// Static-stride worker pool. Each index is processed exactly once; callers
/// write results into per-index slots, so output ordering is deterministic
/// regardless of the thread count.
inline void parallel_for(int64_t n, int n_threads, const std::function<void(int64_t)>& fn) {
    if (n_threads <= 1 || n <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = int(std::min<int64_t>(n_threads, n));
    std::vector<std::thread> pool;
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (int64_t i = t; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pinnse
