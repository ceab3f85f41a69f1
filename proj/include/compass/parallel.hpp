#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace compass {

inline unsigned default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n > 0 ? n : 1;
}

/// Runs f(i) for i in [begin, end) on `threads` workers, splitting the range
/// into contiguous chunks.  The first exception thrown by any worker is
/// rethrown on the calling thread.
template <typename F>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, F&& f) {
    if (end <= begin) return;
    const std::size_t n = end - begin;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = begin; i < end; ++i) f(i);
        return;
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr err;
    std::mutex err_mutex;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace compass
