#pragma once

#include <stdexcept>
#include <string>

namespace icon {

// Bad arguments, bad config, schema violations.
struct InvalidInputError : std::invalid_argument {
  explicit InvalidInputError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical trouble: failed factorizations, divergent integration, singular systems.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-format problems, each with a distinct tag so callers can tell them apart.
struct FormatError : std::runtime_error {
  enum class Kind { VersionMismatch, ChecksumFailure, SchemaViolation, Truncated };
  FormatError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

}  // namespace icon
