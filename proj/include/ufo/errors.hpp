// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_ERRORS_HPP
#define UFO_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ufo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The finite-difference oracle itself misbehaved (e.g. non-deterministic f).
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Unknown condition id, style name, or condition spec.
class ConditionError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf or non-positive variance where a positive value is required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, long step = -1)
      : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Adapter set does not fit the model it is attached to.
class TransferError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given input (e.g. empty region).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Malformed UFOA / UFOM / .vclip payload. `offset` is the byte at which
/// parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Base parameters changed while they were supposed to be frozen.
class FreezeViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace ufo

#endif  // UFO_ERRORS_HPP
