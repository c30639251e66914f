#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mgd {

/// Worker cap from MGD_THREADS; unset, empty, 0 or unparsable means single-threaded.
inline std::size_t threads_from_env() {
    const char* raw = std::getenv("MGD_THREADS");
    if (raw == nullptr || *raw == '\0') return 1;
    char* end = nullptr;
    const long value = std::strtol(raw, &end, 10);
    if (*end != '\0' || value <= 0) return 1;
    return static_cast<std::size_t>(value);
}

/**
 * Runs fn(i) for i in [0, count) on up to `threads` workers. Indices are
 * split into contiguous blocks; callers write results by index, so output
 * order never depends on scheduling. The first exception is rethrown.
 */
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t block = (count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                const std::size_t end = std::min(count, (t + 1) * block);
                for (std::size_t i = t * block; i < end; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& worker : pool) worker.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace mgd
