#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace bwd {

/// How independent Monte Carlo replicates are scheduled. `serial` is the
/// reference path; both must produce bit-identical results.
enum class Execution { serial, parallel };

/// Runs body(i) for i in [0, count). Under Execution::parallel iterations are
/// spread over OpenMP threads; the first exception thrown by any iteration
/// is rethrown on the calling thread once the loop finishes.
template <class Body>
void for_each_index(std::size_t count, Execution exec, Body&& body) {
    if (exec == Execution::serial || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto total = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < total; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

/// Caps the OpenMP thread count; 0 leaves the runtime default.
inline void set_thread_count(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace bwd
