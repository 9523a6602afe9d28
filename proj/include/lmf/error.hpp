#pragma once

#include <stdexcept>
#include <string>

namespace lmf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (missing column, too many bad rows).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (session windows, experiment config).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input has nothing to work on (no executions, no tapes).
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// An optimizer did not converge or a fit lacked support.
class FitError : public Error {
 public:
  using Error::Error;
};

/// The estimator produced a value that is known to be meaningless
/// (negative gamma, Hurst exponent above one).
class EstimationFailure : public Error {
 public:
  using Error::Error;
};

/// Calibration could not be completed or produced unusable coefficients.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lmf
