#pragma once

#include <stdexcept>
#include <string>

namespace kinest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Values outside the domain of an operation (non-finite, out of range,
/// degenerate rotations, invalid configuration).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed files, configs and checkpoints.
class FormatError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

inline void require_domain(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace kinest
