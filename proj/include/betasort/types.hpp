#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace betasort {

// Error taxonomy. ValidationError (and subclasses) mean bad inputs or
// configuration; NumericalError (and subclasses) mean the data defeated the
// estimator. The CLI maps the former to exit code 1 and the latter to 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientData : ValidationError {
    using ValidationError::ValidationError;
};

// Weighted Gram matrix of a rolling window is singular or too ill-conditioned.
struct SingularWindow : NumericalError {
    double condition;
    explicit SingularWindow(double cond)
        : NumericalError("singular rolling window, condition estimate " +
                         std::to_string(cond)),
          condition(cond) {}
};

struct DegeneratePartition : NumericalError {
    using NumericalError::NumericalError;
};

// A grid point falls outside every period's partition support.
struct AllMasked : NumericalError {
    using NumericalError::NumericalError;
};

struct EmptySuite : NumericalError {
    using NumericalError::NumericalError;
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

}  // namespace betasort
