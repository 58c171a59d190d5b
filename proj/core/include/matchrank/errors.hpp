#pragma once

#include <stdexcept>
#include <string>

namespace matchrank {

// Tensor shapes or parameter layouts do not line up.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A value violates an operation's domain contract (bad mask, window
// violation, degenerate labels, non-positive temperature, ...).
struct ValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A configuration file or config struct is invalid.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A data record failed validation; message carries the line number when the
// record came from a JSONL file.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem / serialization failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted because the loss left the finite domain.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace matchrank
