#ifndef CGSMASK_ERROR_HPP
#define CGSMASK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cgsmask {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or index out of range (mismatched matrices, strips past the horizon).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates its domain (non-finite entries, mask values outside [0,1]).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Black-box model failed or returned an unusable output.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// External model broke the line protocol (bad handshake, malformed reply, timeout, death).
class ProtocolError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// A metric is undefined for the given input.
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or parse failure on an input/output file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cgsmask

#endif  // CGSMASK_ERROR_HPP
