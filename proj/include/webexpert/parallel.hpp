// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace webexpert {

// Execution mode for the data-parallel kernels. Every kernel has identical
// semantics in both modes; Serial is the reference path the tests compare
// against, Parallel is the OpenMP path. Kernels are map-style (each output
// element computed independently) so the two modes are bit-identical.
enum class Exec { Serial, Parallel };

template <typename Fn>
inline void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
#ifdef _OPENMP
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#else
  (void)exec;
#endif
  for (std::size_t i = 0; i < n; ++i) {
    fn(i);
  }
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace webexpert
