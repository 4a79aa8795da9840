#pragma once

#include <stdexcept>
#include <string>

namespace tagalign {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input, bad configuration, or a violated precondition.
/// The CLI maps it to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or an unsolvable numerical problem. Exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Least-squares system with fewer anchors than unknowns, or rank deficient.
class UnderdeterminedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace tagalign
