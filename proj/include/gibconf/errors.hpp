#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gibconf {

/// Base of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range class or element index.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A configuration or generator parameter is outside its domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A precondition on the call (non-scalar root, empty split, NaN parameters, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given input (single-class labels, zero variance).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `line()` is 1-based, 0 when not line oriented.
class ParseError : public IoError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : IoError(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class VersionError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace gibconf
