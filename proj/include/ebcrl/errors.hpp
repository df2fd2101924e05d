#pragma once

#include <stdexcept>
#include <string>

namespace ebcrl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The edge set contains a directed cycle.
class CycleError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A node index is out of range.
class IndexError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Numerical failure: non-finite values, failed factorization (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state detected during EM; carries the iteration index.
class NonFiniteError : public NumericError {
 public:
  NonFiniteError(const std::string& what, int iteration)
      : NumericError(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// File system or parse failure on persisted artifacts (exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ebcrl
