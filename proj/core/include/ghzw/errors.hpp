#pragma once

#include <stdexcept>
#include <string>

namespace ghzw {

/// Caller passed something structurally wrong: unknown mode, mismatched
/// registries, out-of-range parameter. Maps to CLI exit code 2.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Bad run configuration (file contents, option ranges). Also exit code 2.
struct ConfigError : UsageError {
    using UsageError::UsageError;
};

/// The computation itself failed: collapsing onto a zero-probability
/// outcome, normalizing a null state, attempt cap exhausted. Exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ghzw
