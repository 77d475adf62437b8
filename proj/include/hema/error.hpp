#pragma once

#include <stdexcept>
#include <string>

namespace hema {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain where the operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, parameter record or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The numerics broke down (non-finite state, failed bracketing, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A delay integral needed solution values outside the stored trajectory.
class CoverageError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// No purely imaginary characteristic root was found on the scanned range.
class NoCrossingError : public NumericalError {
 public:
  NoCrossingError(const std::string& what, double g_min, double g_max)
      : NumericalError(what), g_min_(g_min), g_max_(g_max) {}

  double g_min() const noexcept { return g_min_; }
  double g_max() const noexcept { return g_max_; }

 private:
  double g_min_;
  double g_max_;
};

}  // namespace hema
