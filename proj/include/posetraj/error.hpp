#pragma once

#include <stdexcept>
#include <string>

namespace posetraj {

// Base of every error thrown by the library. Errors deriving from InputError
// describe bad user input (the CLI maps them to exit code 2); everything else
// is an internal failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public InputError {
 public:
  using InputError::InputError;
};

class InvalidSkeleton : public InputError {
 public:
  using InputError::InputError;
};

class SequenceTooShort : public InputError {
 public:
  using InputError::InputError;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class SkeletonMismatch : public InputError {
 public:
  using InputError::InputError;
};

// Sequence-file parse failures. Each failure mode has its own type so callers
// can tell a broken header from a short row or a NaN.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class MalformedHeader : public FormatError {
 public:
  using FormatError::FormatError;
};

class RowLengthError : public FormatError {
 public:
  using FormatError::FormatError;
};

class NonFiniteValue : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedUnits : public FormatError {
 public:
  using FormatError::FormatError;
};

class CheckpointError : public InputError {
 public:
  using InputError::InputError;
};

// Raised when training produces a non-finite loss or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace posetraj
