#include "betasort/threading.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace betasort {

int max_threads() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    static const int cap = [] {
        const char* env = std::getenv("BETASORT_THREADS");
        if (env == nullptr) return 0;
        int v = std::atoi(env);
        return v > 0 ? v : 0;
    }();
    if (cap > 0 && cap < n) n = cap;
    return n < 1 ? 1 : n;
}

}  // namespace betasort
