#pragma once

#include <string>
#include <vector>

#include "gomp/trajopt.hpp"

namespace gomp {

/// Post-hoc tolerances for an emitted trajectory.
struct ValidationTolerances {
  double joint_limit{1e-4};
  double velocity{1e-4};
  double acceleration{1e-3};
  double dynamics{1e-5};
  double boundary_velocity{1e-6};
  double pose{1e-4};
  double obstacle{1e-3};
};

struct Violation {
  std::string constraint;  ///< e.g. "joint_limit", "obstacle", "boundary_velocity"
  int waypoint{-1};
  int joint{-1};
  double magnitude{0.0};  ///< amount beyond the tolerated bound

  std::string describe() const;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Re-evaluates every nonlinear constraint of a trajectory: joint limits,
/// velocity and implied acceleration limits, the dynamics residual, boundary
/// velocities, endpoint grasp-set membership, and tool clearance above the
/// depth field (no margin) at every waypoint and check point.
ValidationReport validate_trajectory(const TrajectoryProblem& problem, const TrajectoryVariables& vars,
                                     const ValidationTolerances& tol = {});

}  // namespace gomp
