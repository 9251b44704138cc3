#pragma once

#include <stdexcept>
#include <string>

namespace tsk {

/// Raised when a computation produces NaN/Inf or hits an exactly singular pivot.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative kernel (QL, QR, inner Newton) fails to converge.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised by experiment configuration parsing and validation.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace tsk
