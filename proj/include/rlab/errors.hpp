#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

// Shape/argument violations (dimension mismatch, bad counts, bad flags).
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values, degenerate geometry, zero norms.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed files (bad magic, truncation, wrong sizes).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing classes, inconsistent image/label counts.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or incomplete run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contract violations on stateful objects (empty queue, stale cache).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

} // namespace rlab
