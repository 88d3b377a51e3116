#pragma once

#include <stdexcept>
#include <string>

namespace iondetect {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Division by a vanishing detuning.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fock-space truncation could not hold the requested tail tolerance.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data carry no information about the fitted parameter.
class NonIdentifiableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Normalisation by a zero total (empty count record).
class NormalizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates a module invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace iondetect
