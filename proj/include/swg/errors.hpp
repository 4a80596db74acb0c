#pragma once

#include <stdexcept>
#include <string>

namespace swg {

// Thrown for malformed station files and malformed artifact files.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, long line = -1)
      : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Bad or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/absent inputs, shape mismatches between artifacts and data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite parameters, infeasible initialization, degenerate numerics.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swg
