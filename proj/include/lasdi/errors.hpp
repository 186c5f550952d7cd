#pragma once

#include <stdexcept>
#include <string>

namespace lasdi {

/// Shape or width mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// API misuse (e.g. backward on a non-scalar).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// NaN/Inf, failed factorization, unstable integration.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration / missing artifacts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lasdi
