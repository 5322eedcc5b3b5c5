#pragma once

#include <stdexcept>
#include <string>

namespace hmlc {

// Exceptions carry the process exit code the CLI maps them to.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

// Bad usage, configuration, hierarchy or policy parameters.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, 1) {}
};

// Unreadable, malformed or inconsistent data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, 2) {}
};

// Non-finite values reached the optimizer or the loss.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what, 3) {}
};

}  // namespace hmlc
