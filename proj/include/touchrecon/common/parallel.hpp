#pragma once

#include <cstddef>

namespace touchrecon {

/// Runs f(i) for i in [0, n). Iterations must not write shared state; callers
/// that reduce results do so afterwards in index order.
template <class F>
void parallel_for(std::ptrdiff_t n, F&& f) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
}

}  // namespace touchrecon
