#pragma once

#include <stdexcept>
#include <string>

namespace rwtune {

/// Mismatched parameter names, lengths, groups or other malformed inputs.
class StructureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A target model produced +inf or NaN, or otherwise failed to evaluate.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The chain sits at a state the sampler cannot move from (zero density).
class InvalidStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Acceptance data that cannot identify a logistic regression.
class DegenerateDesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fit that cannot be inverted into a step size (non-negative slope).
class InvalidFitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or malformed run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rwtune
