#pragma once

#include <stdexcept>
#include <string>

namespace bqd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, or an operation evaluated outside its domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap or step-size floor.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Configuration text could not be parsed or failed validation.
class ConfigError : public Error {
public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what
                       : what),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

/// Reading or writing an artifact failed.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace bqd
