#pragma once

#include <stdexcept>
#include <string>

namespace gomp {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inverse kinematics hit its iteration cap with the residual above tolerance.
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// No horizon produced a feasible trajectory, or the endpoints were unreachable.
struct NoTrajectory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An input violates an invariant. `field()` is the dotted path of the field.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace gomp
