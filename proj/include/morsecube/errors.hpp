#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morsecube {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A grid whose lower corner is not strictly below its upper corner.
class DegenerateDomainError : public Error {
 public:
  DegenerateDomainError(std::size_t axis, const std::string& what)
      : Error(what), axis_(axis) {}
  std::size_t axis() const noexcept { return axis_; }

 private:
  std::size_t axis_;
};

/// A trajectory produced a NaN or infinite state.
class IntegrationBlowupError : public Error {
 public:
  IntegrationBlowupError(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Malformed text input; line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A trajectory did not settle into its target set before the time horizon.
class TruncationError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Computed objects contradict an invariant that holds by construction.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace morsecube
