#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vplab {

/// Degree of parallelism. Results never depend on `threads`.
struct Execution {
    unsigned threads = 1;

    static Execution hardware() {
        return {std::max(1u, std::thread::hardware_concurrency())};
    }
};

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited by exactly one thread; the first exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, const Execution& exec, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, exec.threads), n);
    if (workers <= 1) {
        if (n > 0) body(std::size_t{0}, n);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace vplab
