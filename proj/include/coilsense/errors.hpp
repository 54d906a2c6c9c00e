#pragma once

#include <stdexcept>
#include <string>

namespace coilsense {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor/layer shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf detected in a forward or backward pass, or in an optimizer update.
/// The message names the op that produced the value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; the message names the offending line.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem / IO failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A coil from the active test fold reached a place it must not
/// (normalizer fitting, training data).
class LeakageError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint file rejected: bad magic/version, checksum, precision,
/// or spec mismatch.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace coilsense
