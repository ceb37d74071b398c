#pragma once

#include <stdexcept>
#include <string>

namespace twr {

/// Argument outside the mathematical domain of a function (e.g. E1 at z <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed argument combination (e.g. an integration interval with a > b).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Precondition broken by the caller, such as deciding with infeasible thresholds.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thresholds on the singular set lambda = -1, mu = -1 or lambda + mu + 1 = 0.
class SingularThresholds : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Quadrature that did not reach its tolerance. Carries the best estimate.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

}  // namespace twr
