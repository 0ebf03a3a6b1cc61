#pragma once

#include <stdexcept>
#include <string>

namespace toruslab {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments: mismatched geometries, bad shapes, out-of-range parameters.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed to reach its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration input. Carries a 1-based source position when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"
                       : what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// File persistence failures (missing files, corrupt headers).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace toruslab
