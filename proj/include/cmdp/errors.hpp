#pragma once

#include <stdexcept>
#include <string>

namespace cmdp {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed something that violates a documented precondition
// (bad shapes, bad configuration, empty grids). CLI exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public UsageError {
 public:
  using UsageError::UsageError;
};

class SupportMismatch : public UsageError {
 public:
  using UsageError::UsageError;
};

class ConfigInvalid : public UsageError {
 public:
  using UsageError::UsageError;
};

class EmptyBuffer : public UsageError {
 public:
  using UsageError::UsageError;
};

// A quantity left the domain where the mathematics is defined. CLI exit
// code 3.
class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

class ZeroPositivePart : public NumericalDomainError {
 public:
  using NumericalDomainError::NumericalDomainError;
};

class PerturbationTooLarge : public NumericalDomainError {
 public:
  using NumericalDomainError::NumericalDomainError;
};

class InvalidContext : public NumericalDomainError {
 public:
  using NumericalDomainError::NumericalDomainError;
};

class ContextOutOfRange : public NumericalDomainError {
 public:
  using NumericalDomainError::NumericalDomainError;
};

class UnreachableGoal : public InvalidContext {
 public:
  using InvalidContext::InvalidContext;
};

class SingularSystem : public NumericalDomainError {
 public:
  using NumericalDomainError::NumericalDomainError;
};

class PremiseViolated : public NumericalDomainError {
 public:
  using NumericalDomainError::NumericalDomainError;
};

// A proved inequality failed on concrete numbers. Always an implementation
// bug. CLI exit code 4.
class BoundViolated : public Error {
 public:
  explicit BoundViolated(const std::string& what, std::string details = {})
      : Error(what), details_(std::move(details)) {}
  const std::string& details() const noexcept { return details_; }

 private:
  std::string details_;
};

}  // namespace cmdp
