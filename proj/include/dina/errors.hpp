#pragma once

#include <stdexcept>
#include <string>

namespace dina {

/// Shape or extent mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition (non-scalar loss, T < 1, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InsufficientDataError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or numerically unusable inputs (zero-norm embeddings).
struct NumericError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Malformed or truncated file.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File parses but its contents disagree with themselves (S mismatch, NaN payload).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dina
