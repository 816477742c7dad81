#pragma once

#include <stdexcept>
#include <string>

namespace ctree {

// Bad input: malformed files, violated preconditions, schema errors.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure on otherwise valid input (singular systems, budgets).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace ctree
