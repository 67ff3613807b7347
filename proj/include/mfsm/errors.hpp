#pragma once

#include <stdexcept>
#include <string>

namespace mfsm {

// Bad input: malformed files, inconsistent shapes, invalid configuration.
// The CLI maps this family to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: Cholesky breakdown, diverged training, undefined metric.
// The CLI maps this family to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ":" +
                   std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ChecksumError : public InputError {
 public:
  using InputError::InputError;
};

class VersionError : public InputError {
 public:
  using InputError::InputError;
};

class UnsupportedModelError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace mfsm
