#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lrinfer {

inline int hardware_jobs() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Run fn(i) for i in [0, n). With jobs > 1 iterations run under OpenMP;
// callers must write results into per-index slots so the outcome is
// identical for every schedule and thread count. Reductions over the slots
// happen serially afterwards, in index order.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (jobs > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            fn(static_cast<std::size_t>(i));
        }
        return;
#endif
    }
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace lrinfer
