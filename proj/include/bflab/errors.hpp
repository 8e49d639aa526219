#pragma once

#include <stdexcept>
#include <string>

namespace bflab {

// Bad or inconsistent configuration / precondition violation. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Requested instance exceeds a hard resource cap. CLI exit code 3.
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Quadrature failed to reach the requested error estimate.
struct QuadratureError : std::runtime_error {
  explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

// A query algorithm reached a leaf that does not determine the target function.
struct DeterminationError : std::runtime_error {
  explicit DeterminationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bflab
