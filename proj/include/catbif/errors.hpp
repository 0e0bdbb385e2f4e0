#pragma once

#include <stdexcept>
#include <string>

namespace catbif {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input (CSV rows, NaN cells, ...). Message names the offending
/// line or field.
struct parse_error : error {
    explicit parse_error(const std::string& msg, long line = -1)
        : error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_number(line) {}
    long line_number;
};

/// Not enough data points to evaluate an estimator.
struct insufficient_data_error : error {
    using error::error;
};

/// Argument outside the mathematical domain of an operation.
struct domain_error : error {
    using error::error;
};

/// Requested range not covered by the model (e.g. detrending beyond the
/// trend validity window).
struct range_error : error {
    using error::error;
};

/// Degenerate linear system or fit (zero regressor variance, singular
/// normal matrix).
struct singular_error : error {
    using error::error;
};

/// Simulated trajectory left the overflow guard. Carries the step index.
struct divergence_error : error {
    divergence_error(const std::string& msg, long step)
        : error(msg + " at step " + std::to_string(step)), at_step(step) {}
    long at_step;
};

/// Inconsistent set of constraints (e.g. threefold root requested from a
/// two-root inverse problem).
struct degenerate_error : error {
    using error::error;
};

}  // namespace catbif
