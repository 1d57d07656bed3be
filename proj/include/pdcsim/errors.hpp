#pragma once

#include <stdexcept>
#include <string>

namespace pdc {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  success = 0,
  config = 2,
  domain = 3,
  numerical = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

// Malformed configuration or database input, unknown crystal names.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

// The request is well formed but the physics has no answer.
class DomainError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::domain; }
};

class RangeError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NoPhasematchingError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NoGvmPointError : public DomainError {
 public:
  using DomainError::DomainError;
};

class FilterSupportError : public DomainError {
 public:
  explicit FilterSupportError(const std::string& what = "filter removes all support")
      : DomainError(what) {}
};

class NumericalError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

}  // namespace pdc
