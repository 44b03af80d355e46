#pragma once

#include <stdexcept>
#include <string>

namespace infogreedy {

/// Bad argument or violated precondition (maps to CLI exit code 2 for configs).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Malformed experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Missing or corrupt data file; carries path plus byte offset / line number context.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (non-convergence, underflow of all mixture weights, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace infogreedy
