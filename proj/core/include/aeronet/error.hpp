#pragma once

#include <stdexcept>
#include <string>

namespace aeronet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: unreadable files, bad CSV rows, bad config keys.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Input parsed fine but violates a precondition of the model
/// (empty cohort, degenerate geometry, infeasible power budget, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Raised when a UAV and a user coincide in 3D, or a distance is zero.
class GeometryError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// The configured power budget cannot meet the minimum-rate requirement.
class InfeasiblePowerError : public ValidationError {
public:
  InfeasiblePowerError(const std::string& what, double bound_watts)
      : ValidationError(what), bound_watts_(bound_watts) {}

  [[nodiscard]] double bound_watts() const noexcept { return bound_watts_; }

private:
  double bound_watts_;
};

/// A planner read ground-truth positions it is not allowed to see.
class PlanningLeakError : public Error {
public:
  using Error::Error;
};

}  // namespace aeronet
