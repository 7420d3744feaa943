#pragma once

#include <stdexcept>
#include <string>

namespace epflow {

/// Base class for every failure raised by the solver library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a gas-law function (e.g. rho <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The density closure h^{-1} is undefined: the argument does not exceed
/// h(rho_floor).
class VacuumError : public Error {
 public:
  using Error::Error;
};

/// A state or background is not strictly subsonic where it has to be.
class NotSubsonicError : public Error {
 public:
  using Error::Error;
};

/// rho^2 p'(rho) - J0^2 is within the sonic guard.
class SonicProximityError : public Error {
 public:
  using Error::Error;
};

/// Failure of a 1D initial value integration at a specific position.
class BreakdownError : public Error {
 public:
  enum class Kind { Sonic, Vacuum };

  BreakdownError(Kind kind, double x, const std::string& what)
      : Error(what), kind_(kind), x_(x) {}

  Kind kind() const noexcept { return kind_; }
  double position() const noexcept { return x_; }

 private:
  Kind kind_;
  double x_;
};

/// The shooting method could not bracket the target exit density.
class NoBracketError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure ran out of iterations.
class MaxIterationsError : public Error {
 public:
  using Error::Error;
};

/// Successive Picard differences failed to contract.
class NonContractionError : public Error {
 public:
  using Error::Error;
};

/// An iterate (or the requested sigma) left the admissibility ball.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

/// Sparse factorization or solve failed.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Field shapes do not conform to the grid.
class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

/// Boundary data violate the wall compatibility condition.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// A domain map folds over (nonpositive Jacobian determinant).
class FoldOverError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace epflow
