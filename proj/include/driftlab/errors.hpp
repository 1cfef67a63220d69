#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration values, unknown config keys, unknown corruption kinds.
struct ConfigError : Error {
    using Error::Error;
};

// Dimension mismatches between tensors, params, masks or prediction lists.
struct ShapeError : Error {
    using Error::Error;
};

// Class label outside [0, K).
struct InvalidLabelError : Error {
    using Error::Error;
};

// Input data violates its contract (pixels outside [0,1], incomplete grid).
struct InvalidInputError : Error {
    using Error::Error;
};

// Interpolation query outside the knot range.
struct RangeError : Error {
    using Error::Error;
};

// Correlation requested on constant or degenerate series.
struct UndefinedCorrelationError : Error {
    using Error::Error;
};

// Non-finite parameters appeared during federated training.
struct DivergenceError : Error {
    DivergenceError(const std::string& msg, int round) : Error(msg), round(round) {}
    int round;
};

// Calibration target unreachable even at maximum severity.
struct CalibrationInfeasibleError : Error {
    CalibrationInfeasibleError(const std::string& msg, double max_achievable_drop)
        : Error(msg), max_achievable_drop(max_achievable_drop) {}
    double max_achievable_drop;
};

// Filesystem failures, annotated with the offending path.
struct IoError : Error {
    using Error::Error;
};

}  // namespace driftlab
