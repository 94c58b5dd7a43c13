#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace crimexfer {

/// Worker count for `jobs` independent jobs: `requested` (0 = hardware threads), capped by the job count.
inline std::size_t effective_workers(std::size_t requested, std::size_t jobs) {
    std::size_t w = requested == 0 ? std::max<std::size_t>(1, std::thread::hardware_concurrency()) : requested;
    return std::max<std::size_t>(1, std::min(w, jobs));
}

/// Runs fn(0..n-1) on up to `workers` threads. Jobs write results into caller-owned slots, so the
/// outcome is independent of scheduling. After the first failure no new jobs start; the failure
/// with the lowest index is rethrown.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    workers = effective_workers(workers, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace crimexfer
