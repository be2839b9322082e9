#pragma once

#include <stdexcept>
#include <string>

namespace hact {

/// Bad or inconsistent input data (maps to CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed serialized input.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Tensor shape mismatch in the autodiff engine.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite loss during training (maps to CLI exit code 3).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hact
