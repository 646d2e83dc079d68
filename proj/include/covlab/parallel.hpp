#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace covlab {

/// Worker count from COVERAGE_LAB_WORKERS, else the hardware concurrency (at least 1).
unsigned default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads.
///
/// Indices are handed out dynamically, so body must write only to
/// per-index storage; callers aggregate afterwards in index order, which
/// keeps results independent of scheduling. The first exception thrown by
/// any body is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body)
{
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    const auto n_threads = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    std::vector<std::thread> threads;
    threads.reserve(n_threads - 1);
    for (unsigned t = 1; t < n_threads; ++t) threads.emplace_back(run);
    run();
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace covlab
