#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace su11 {

/// Worker count: SU11_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SU11_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap > 0) return static_cast<unsigned>(std::min<long>(cap, 1024));
        } catch (const std::exception&) {
        }
    }
    return hw;
}

/// Runs fn(i) for i in [0, n). Each index is processed exactly once; results
/// must be written to per-index slots so output is schedule independent.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace su11
