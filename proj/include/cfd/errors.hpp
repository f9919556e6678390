#pragma once

#include <stdexcept>
#include <string>

namespace cfd {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Evaluation outside a declared domain (signal, matrix function, grid coverage).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Exponent or intermediate value left the floating-point range.
class OverflowError : public Error {
  public:
    using Error::Error;
};

/// An iteration or quadrature failed to reach its tolerance within budget.
class ConvergenceError : public Error {
  public:
    using Error::Error;
};

/// A stated precondition does not hold (admissibility, Lipschitz bounds, ...).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// Spectrum too close to the imaginary axis for a hyperbolic splitting.
class NonHyperbolicError : public PreconditionError {
  public:
    using PreconditionError::PreconditionError;
};

}  // namespace cfd
