#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sshmc {

// Runs fn(i) for i in [0, n). Tasks must be independent and write only to
// their own output slots, so parallel and serial execution give identical
// results. Nested calls run serially on the calling thread. The first
// exception thrown by any task is rethrown on the caller.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    static thread_local bool inside = false;
    const unsigned hw = std::thread::hardware_concurrency();
    if (inside || hw <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(hw, n));
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        inside = true;
        try {
            for (std::size_t i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) {
                fn(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            cursor.store(n);
        }
        inside = false;
    };
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) threads.emplace_back(body);
    body();
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sshmc
