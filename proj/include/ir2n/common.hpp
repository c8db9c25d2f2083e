#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ir2n {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised for violated preconditions (dimension mismatch, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative building block cannot produce a usable result.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace ir2n
