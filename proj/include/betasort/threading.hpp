#pragma once

namespace betasort {

// Number of threads parallel regions may use: OpenMP's max, capped by the
// BETASORT_THREADS environment variable when set. Always >= 1.
int max_threads();

}  // namespace betasort
