#pragma once

#include <stdexcept>
#include <string>

namespace fingap {

/// Malformed or out-of-contract input (bad band ordering, nonpositive a_n, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation point outside the domain of a function (e.g. density off the bands).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure could not reach its accuracy target.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal numerical failure (singular system that should not be singular).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constructed object violates one of its mathematical invariants.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fingap
