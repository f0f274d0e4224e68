#pragma once

#include <stdexcept>
#include <string>

namespace squeak {

/// Bad caller input: dimension mismatch, index out of range, non-positive
/// regularization.
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be PSD is not, beyond tolerance.
class numerical_domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A documented precondition of the algorithm was broken by the caller.
class contract_violation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid experiment configuration or unreadable dataset.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace squeak
