#pragma once

#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace advfilter {

// Runs fn(i) for every i in [0, n). workers == 1 takes the plain serial
// loop, which doubles as the reference path the tests compare against;
// workers > 1 fans out with OpenMP. fn(i) must only touch state owned by
// index i, so outputs are identical for every worker count.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
  // Exceptions must not unwind out of the parallel region; keep the first one
  // and rethrow it on the calling thread.
  std::exception_ptr error;
#pragma omp parallel for num_threads(workers) schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(advfilter_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

inline int hardware_cores() {
#ifdef _OPENMP
  return omp_get_num_procs();
#else
  return 1;
#endif
}

}  // namespace advfilter
