#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fwc {

inline int default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Run fn(begin, end) over disjoint blocks of [0, n). Blocks only partition the
// range; each task writes its own slice, so results never depend on the worker
// count. The first exception thrown by any worker is rethrown.
inline void parallel_for(size_t n, int workers, const std::function<void(size_t, size_t)>& fn) {
    if (n == 0) return;
    if (workers < 1) workers = 1;
    const size_t nblocks = std::min<size_t>(static_cast<size_t>(workers), n);
    if (nblocks == 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    const size_t chunk = (n + nblocks - 1) / nblocks;
    for (size_t b = 0; b < nblocks; ++b) {
        const size_t begin = b * chunk;
        const size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace fwc
