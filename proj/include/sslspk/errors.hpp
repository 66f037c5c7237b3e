#pragma once

#include <stdexcept>
#include <string>

namespace sslspk {

// Shape or dimension mismatch at an operation boundary.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Math domain violation: log of a non-positive value, degenerate (zero-norm)
// embedding, non-unit input where unit norm is part of the contract.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Non-finite values or a violated numeric invariant (also guards tape misuse).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// I/O and file-format problems: WAV, manifests, checkpoints, trial lists.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sslspk
