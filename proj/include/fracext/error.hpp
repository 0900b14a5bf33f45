#pragma once

#include <stdexcept>
#include <string>

namespace fracext {

/// Base class for all library failures.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the admissible range of an operation.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Operation requested for a base dimension it does not support.
class UnsupportedDimension : public Error {
public:
  using Error::Error;
};

/// Special function evaluated outside its validated domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Iterative solver hit its iteration cap before reaching the tolerance.
class ConvergenceFailure : public Error {
public:
  ConvergenceFailure(const std::string &what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

private:
  int iterations_;
  double residual_;
};

/// Negative curvature or a non-positive pivot: the operator is not SPD.
class IndefiniteMatrix : public Error {
public:
  using Error::Error;
};

namespace detail {
inline void require(bool cond, const std::string &msg) {
  if (!cond)
    throw InvalidArgument(msg);
}
} // namespace detail

} // namespace fracext
