#pragma once

#include "gomp/kinematics.hpp"
#include "gomp/trajopt.hpp"

namespace gomp {

/// Per-joint cubic from q0 to qH with zero end velocities, sampled at H+1
/// waypoints; velocities are the analytic derivative at each sample.
TrajectoryVariables spline_init(const JointConfig& q0, const JointConfig& qH, int H, double t_step);

/// Resamples a trajectory onto a shorter horizon: linear interpolation of
/// positions in normalized time, velocities scaled by h / new_h, end
/// velocities zeroed.
TrajectoryVariables shrink_warm_start(const TrajectoryVariables& prev, int new_h);

}  // namespace gomp
