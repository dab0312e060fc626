#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace mmflow::detail {

// Runs body(i) for i in [0, count) over contiguous blocks. Callers write into
// per-index slots and reduce afterwards in index order.
template <typename Body>
void parallel_for(int count, int threads, Body&& body) {
    threads = std::clamp(threads, 1, std::max(count, 1));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(threads);
    const int chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
            try {
                const int end = std::min(count, (t + 1) * chunk);
                for (int i = t * chunk; i < end; ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace mmflow::detail
