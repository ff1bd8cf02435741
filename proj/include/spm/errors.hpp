#pragma once

#include <stdexcept>
#include <string>

namespace spm {

// Invalid distribution or model parameter (non-positive scale, bad weights, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function (logit(0), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent input data: files, cohorts, schemas.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A participant age that falls outside the age grid of an RW2 effect.
class GridError : public DataError {
 public:
  using DataError::DataError;
};

// Sum-to-zero constraint of an RW2 effect violated.
class ConstraintError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

// Sampler divergence or other non-finite numerical state.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spm
