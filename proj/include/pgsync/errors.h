#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pgsync {

// Invalid arguments, malformed matrices, bad partitions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// A matrix function was asked for outside its domain (asymmetric or
// indefinite input).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A coupling matrix violates a compatibility condition required by the
// requested operation.
class IncompatibleCoupling : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteState : public std::runtime_error {
 public:
  NonFiniteState(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Unreadable or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pgsync
