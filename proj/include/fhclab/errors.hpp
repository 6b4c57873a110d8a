#pragma once

#include <stdexcept>
#include <string>

namespace fhclab {

/// Invalid argument to an operation (bad size, bad range, violated precondition).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation undefined on the given input (e.g. gap of an empty set).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Requested computation is unavailable in the current arithmetic mode.
class ArithmeticModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A construction could not be carried out (infeasible tent, broken invariant).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vectors expected to be independent are not.
class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Work estimate exceeds the configured budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fhclab
