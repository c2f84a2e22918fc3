#pragma once

#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace survsl {

/// Worker count for the data-parallel kernels. workers <= 1 selects the serial
/// reference path. Every kernel writes results by work-item index and draws
/// randomness from per-item seeds, so the output does not depend on the
/// worker count or on scheduling.
struct Execution {
  int workers = 1;

  static Execution serial() { return {}; }
  bool is_parallel() const { return workers > 1; }
};

inline int available_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class Fn>
void serial_for(std::size_t count, Fn&& fn) {
  for (std::size_t i = 0; i < count; ++i) fn(i);
}

/// Runs fn(i) for i in [0, count) on an OpenMP team. Nested calls from inside
/// a parallel region run serially. The first exception thrown by any item is
/// rethrown on the calling thread once the team has joined.
template <class Fn>
void parallel_for(std::size_t count, const Execution& exec, Fn&& fn) {
#ifdef _OPENMP
  if (!exec.is_parallel() || count < 2 || omp_in_parallel()) {
    serial_for(count, fn);
    return;
  }
  std::exception_ptr failure;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(exec.workers)
  for (long long i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(survsl_parallel_for_error)
      {
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
#else
  (void)exec;
  serial_for(count, fn);
#endif
}

}  // namespace survsl
