#pragma once

#include <stdexcept>
#include <string>

namespace spiked {

/// Invalid structural parameters (dimensions, multiplicities, counts).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value falls outside the mathematical domain of a formula,
/// e.g. an undetectable spike passed to the cluster variance.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// phi_inverse / estimate_alphas on a value at or below the bulk edge.
class OutOfRangeError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Prior has no admissible K-tuples (K > |E|).
class EmptyPriorError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Input failed a structural check, e.g. a non-Hermitian matrix.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spiked
