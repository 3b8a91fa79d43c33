#pragma once

#include <stdexcept>
#include <string>

namespace msr {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input is structurally unusable (too short, empty, malformed file).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A numeric argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A record violates a data invariant. `rule()` names the violated rule.
class ValidationError : public Error {
 public:
  ValidationError(std::string rule, const std::string& what)
      : Error(what), rule_(std::move(rule)) {}

  const std::string& rule() const noexcept { return rule_; }

 private:
  std::string rule_;
};

/// The operation is not permitted in the current state (e.g. a submitted package).
class StateError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace msr
