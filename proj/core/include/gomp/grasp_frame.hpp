#pragma once

#include <Eigen/Core>

#include "gomp/kinematics.hpp"

namespace gomp {

/// How much rotational freedom an endpoint frame grants.
enum class FreeRotation {
  None,  ///< orientation pinned to the nominal frame (within epsilon)
  Axis,  ///< rotation about `free_axis` within [theta_lo, theta_hi]
  Any,   ///< orientation unconstrained
};

const char* to_string(FreeRotation f);

/// Lower/upper bounds on the 6 residual components of a grasp frame.
struct ResidualBounds {
  Vector6d lower;
  Vector6d upper;
};

/// A set of tool poses: the nominal pose rotated about a free axis through the
/// tool origin. Residuals are expressed in a rotated error frame whose last
/// rotational component is the rotation angle about the free axis.
struct GraspFrame {
  Pose pose;
  FreeRotation freedom{FreeRotation::None};
  Eigen::Vector3d free_axis{Eigen::Vector3d::UnitY()};  ///< in the nominal frame
  double theta_lo{0.0};
  double theta_hi{0.0};
  /// Small per-component tolerances: translation (m) then rotation (rad).
  Vector6d epsilon{(Vector6d() << 1e-3, 1e-3, 1e-3, 1e-2, 1e-2, 1e-2).finished()};

  /// Tool pointing straight down (tool z = -world z), yawed by `yaw` about world z.
  static GraspFrame top_down(const Eigen::Vector3d& position, double yaw);

  /// Same frame with a symmetric rotation range about the free axis.
  GraspFrame with_rotation_range(double half_width) const;

  Eigen::Vector3d world_axis() const { return pose.rotation * free_axis; }

  /// 3x3 map from the world-frame rotation error to residual components.
  Eigen::Matrix3d error_rotation() const;

  /// Residual of a tool pose: translation error, then the rotated log error.
  Vector6d residual(const Pose& current) const;

  ResidualBounds bounds() const;

  /// Largest violation of the residual bounds (0 when inside).
  double violation(const Pose& current) const;

  /// Nominal pose rotated by `theta` about the free axis.
  Pose member(double theta) const;

  /// Throws ValidationError naming the field (prefixed by `path`).
  void validate(const std::string& path) const;

  bool operator==(const GraspFrame& o) const;
};

}  // namespace gomp
