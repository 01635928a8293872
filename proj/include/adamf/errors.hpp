#pragma once

#include <stdexcept>
#include <string>

namespace adamf {

// Error taxonomy. The CLI maps each kind onto a distinct exit code.

/// Violated precondition or shape contract (exit 2).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Rejected configuration (exit 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally valid input that cannot be used (exit 2).
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss, gradient or probe value (exit 3).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, unwritable or corrupt file (exit 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed line in a data file. Reported as an I/O class failure.
class ParseError : public IoError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : IoError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace adamf
