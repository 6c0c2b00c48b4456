#pragma once

#include <stdexcept>
#include <string>

namespace rp3 {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or parameter-range violation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Evaluation at (or too close to) a collision or chart singularity.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Iteration did not converge, bracket lost, step-size underflow, etc.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Input is non-degenerate in theory but degenerate at working precision.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// A trajectory failed to come back to a surface of section in time.
class NoReturnError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A candidate section is not transverse to the flow on its sample grid.
class NonTransverseError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Newton on the return map found no fixed point from any seed.
class FixedPointError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace rp3
