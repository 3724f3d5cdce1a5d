#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gridtd {

// Worker-thread cap: GRIDTD_THREADS env var wins, otherwise the hardware
// count.  Always at least 1.
inline std::size_t worker_thread_count() {
    if (const char* env = std::getenv("GRIDTD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw std::invalid_argument(
                "GRIDTD_THREADS must be a positive integer, got '" +
                std::string(env) + "'");
        return static_cast<std::size_t>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

// Runs fn(0..count-1) across at most `threads` workers.  Jobs must be
// independent (each writes only its own output slot); with that discipline
// results do not depend on the thread count.  The first exception thrown by
// any job is rethrown here after all workers stop.
inline void run_jobs(std::size_t count, std::size_t threads,
                     const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (threads == 0) throw std::invalid_argument("run_jobs: zero threads");
    threads = std::min(threads, count);
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline void run_jobs(std::size_t count,
                     const std::function<void(std::size_t)>& fn) {
    run_jobs(count, worker_thread_count(), fn);
}

}  // namespace gridtd
