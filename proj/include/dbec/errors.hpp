#pragma once

#include <stdexcept>
#include <string>

namespace dbec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or grid mismatch between operands.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (t <= 0, zero field, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared; `what()` names the offending quantity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The grid cannot represent the requested state or transformation.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Coupling pair lies in a regime where no normalized solution exists.
class RegimeError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// The flow blew up; carries the iteration of the last stable iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, long last_stable_iteration)
      : Error(msg), last_stable_iteration_(last_stable_iteration) {}
  long last_stable_iteration() const noexcept { return last_stable_iteration_; }

 private:
  long last_stable_iteration_;
};

}  // namespace dbec
