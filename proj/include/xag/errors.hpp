#pragma once

#include <stdexcept>
#include <string>

namespace xag {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible. Message reports both shapes.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// An operation precondition was violated.
class ContractError : public Error {
public:
  using Error::Error;
};

/// A configuration value or file is invalid.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// An operation was issued in the wrong pipeline state (stage ordering, missing inputs).
class StateError : public Error {
public:
  using Error::Error;
};

/// A file is corrupt, truncated, or fails a hash check.
class IntegrityError : public Error {
public:
  using Error::Error;
};

}  // namespace xag
