#pragma once

#include <stdexcept>
#include <string>

namespace riskplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trajectory lengths or time steps disagree with the scenario horizon.
class HorizonMismatch : public Error {
 public:
  using Error::Error;
};

/// Matrix or token shapes are inconsistent.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyTrajectory : public Error {
 public:
  using Error::Error;
};

/// Map gating needs at least one map embedding.
class EmptyMap : public Error {
 public:
  using Error::Error;
};

/// Two plans share no common future window.
class NoOverlap : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// An invariant was violated while loading; `field()` names the offending path.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace riskplan
