#pragma once

#include <stdexcept>
#include <string>

namespace adcnn {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad magic bytes or otherwise unrecognisable file layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that uses a feature we do not read (datatype, rank, ...).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Fewer bytes on disk than the header promises.
class TruncationError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint written for a different network architecture.
class FingerprintError : public Error {
 public:
  using Error::Error;
};

/// Checksum or manifest mismatch.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or arguments supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation applied in an order the dataset manifest forbids.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace adcnn
