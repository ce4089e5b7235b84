#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace isoas {

// Dimension or encoding problems in caller-supplied data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The problem configuration is malformed or describes an unsupported model.
// `details` carries one entry per offending field or failed check.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what,
                       std::vector<std::string> details = {})
      : std::runtime_error(what), details_(std::move(details)) {}

  const std::vector<std::string>& details() const { return details_; }

 private:
  std::vector<std::string> details_;
};

// Model validation failed (e.g. the gain does not stabilize the plant).
class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// The LP backend could not produce a trustworthy answer.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iteration or size cap was exceeded. These are never silent truncations.
class CapExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isoas
