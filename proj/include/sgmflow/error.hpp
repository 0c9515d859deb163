#pragma once

#include <stdexcept>
#include <string>

namespace sgmflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments or configuration was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An operation needs the optimal value f* but the objective does not carry one.
class MissingOptimum : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a failed numerical procedure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgmflow
