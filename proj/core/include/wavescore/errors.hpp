#ifndef WAVESCORE_ERRORS_HPP
#define WAVESCORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wavescore {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or size disagreement between operands.
struct DimensionError : Error {
  using Error::Error;
};

// NaN/Inf where a finite value is required.
struct NumericError : Error {
  using Error::Error;
};

// Invalid user-supplied configuration or parameter value.
struct ConfigError : Error {
  using Error::Error;
};

// Coordinate outside the valid range of a tensor.
struct IndexError : Error {
  using Error::Error;
};

// File system or encoding failure.
struct IoError : Error {
  using Error::Error;
};

// Serialized data written by an incompatible format version.
struct VersionError : Error {
  using Error::Error;
};

// Serialized data failed its length or checksum validation.
struct IntegrityError : Error {
  using Error::Error;
};

// Malformed autodiff graph construction (e.g. node from another tape).
struct GraphError : Error {
  using Error::Error;
};

// Gaussian oracle misuse: singular covariance or unsupported basis.
struct ModelError : Error {
  using Error::Error;
};

}  // namespace wavescore

#endif  // WAVESCORE_ERRORS_HPP
