#pragma once

#include <exception>
#include <vector>

namespace depositum {

/// Thread cap from DEPOSITUM_THREADS (unset or invalid: hardware concurrency).
/// Parallelism never changes results: every task owns its output slot and RNG stream.
int configured_threads();

/// Runs body(i) for i in [0, count) on up to `threads` threads. The first
/// exception (lowest index) is rethrown after all tasks finish.
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count > 0 ? count : 0));
#pragma omp parallel for schedule(dynamic) num_threads(threads > 0 ? threads : 1) if (threads > 1 && count > 1)
    for (int i = 0; i < count; ++i) {
        try {
            body(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace depositum
