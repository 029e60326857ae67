#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hjnav {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction parameter (negative amplitude, empty band, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Query outside the declared extent of a field or grid.
class ExtentError : public Error {
 public:
  ExtentError(const std::string& axis, double value, double lo, double hi);
  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

/// Malformed binary or text input. Carries the byte offset (or line number
/// for line-oriented formats) where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset);
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Requested time range is not covered by the available data.
class HorizonError : public Error {
 public:
  using Error::Error;
};

/// The CFL time step fell under the configured floor.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Policy queried on a cell whose value is the unreachable sentinel.
class StrandedError : public Error {
 public:
  using Error::Error;
};

/// No forecast released yet at the query time.
class AvailabilityError : public Error {
 public:
  using Error::Error;
};

/// Statistic undefined for the input (empty sample, singular covariance...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or missing configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mission sampler could not satisfy its constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace hjnav
