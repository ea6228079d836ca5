#pragma once

#include <stdexcept>
#include <string>

namespace splatstyle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file was readable but its contents do not follow the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (non-finite data, bad rotation, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Two objects that must agree in shape or channel count do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

/// A metric was requested on an empty support (e.g. an all-false mask).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace splatstyle
