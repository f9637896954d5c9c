// Common value types and error classes shared by every module.
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace esfem {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// N nodal 3-vectors stored row-wise; each column is one ambient component,
/// so a scalar N×N matrix acts componentwise as `M * x`.
using NodalVector = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Barycentric coordinates (λ0, λ1, λ2) on the reference triangle with corners
/// (0,0), (1,0), (0,1); the reference coordinates are (λ1, λ2).
using Barycentric = Eigen::Vector3d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate or rank-deficient geometry.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Requested size exceeds an implementation cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at or beyond the singular time of the exact flow.
class SingularTimeError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// An iterative solver failed to reach its tolerance.
class IterationError : public Error {
 public:
  IterationError(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace esfem
