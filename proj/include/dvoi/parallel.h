#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dvoi {

/// Number of workers used when the caller asks for "all cores" (jobs == 0).
inline std::size_t default_jobs() {
    auto n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items are claimed
/// dynamically; results must be written to index-keyed storage by the caller.
/// The first exception thrown by any item is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn &&fn) {
    if (jobs == 0) {
        jobs = default_jobs();
    }
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            auto i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::scoped_lock lock{error_mutex};
                if (!first_error) {
                    first_error = std::current_exception();
                }
                next.store(n);
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back(worker);
    }
    for (auto &t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace dvoi
