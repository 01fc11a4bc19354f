// parallel.hpp
// Index-parallel loop used by the per-bin drivers. Each index writes only its
// own output slot, so results do not depend on the schedule.

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mclpbeam {

// num_threads <= 0 picks std::thread::hardware_concurrency().
template <typename Fn>
void ParallelFor(int count, int num_threads, Fn &&fn) {
    if (count <= 0) return;
    int workers = num_threads > 0
                      ? num_threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto &t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mclpbeam
