#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gomp/errors.hpp"

namespace gomp {

using JointConfig = Eigen::VectorXd;
using JointVelocity = Eigen::VectorXd;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

struct MechanicalLimits;

/// Standard Denavit-Hartenberg parameters of one revolute joint.
struct DHLink {
  double a{0.0};             ///< link length (m)
  double alpha{0.0};         ///< link twist (rad)
  double d{0.0};             ///< link offset (m)
  double theta_offset{0.0};  ///< joint-angle offset (rad)

  bool operator==(const DHLink&) const = default;
};

/// Revolute serial chain. Joint i rotates about the z axis of frame i-1.
class KinematicChain {
 public:
  KinematicChain() = default;
  explicit KinematicChain(std::vector<DHLink> links);

  static KinematicChain ur5();

  int joint_count() const { return static_cast<int>(links_.size()); }
  const std::vector<DHLink>& links() const { return links_; }

  /// Upper bound on the distance from the base origin to the tool.
  double reach() const;

  bool operator==(const KinematicChain&) const = default;

 private:
  std::vector<DHLink> links_;
};

struct Pose {
  Eigen::Matrix3d rotation{Eigen::Matrix3d::Identity()};
  Eigen::Vector3d translation{Eigen::Vector3d::Zero()};

  static Pose identity() { return {}; }
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t);

  Pose operator*(const Pose& rhs) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const;
  Pose inverse() const;
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation); }

  /// True when the rotation is proper orthonormal within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

/// Translation error stacked on the axis-angle log of R_target * R_current^T.
Vector6d pose_error(const Pose& target, const Pose& current);

Eigen::Matrix3d skew(const Eigen::Vector3d& w);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);
/// Inverse right Jacobian of SO(3): log(exp(w) exp(e)) ~ w + jr_inv(w) e.
Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& w);

/// A point rigidly attached to the frame after joint `link` (0-based).
struct CheckPoint {
  int link{0};
  Eigen::Vector3d offset{Eigen::Vector3d::Zero()};

  bool operator==(const CheckPoint&) const = default;
};

Pose forward_kinematics(const KinematicChain& chain, const JointConfig& q);

/// Frames 0..n: base, then the frame after each joint.
std::vector<Pose> link_frames(const KinematicChain& chain, const JointConfig& q);

/// Geometric Jacobian of the tool frame: rows 0-2 translational, 3-5 rotational.
Jacobian jacobian(const KinematicChain& chain, const JointConfig& q);

Eigen::Vector3d check_point_position(const KinematicChain& chain, const JointConfig& q,
                                     const CheckPoint& point);
/// Translational Jacobian (3 x n) of a chain-mounted point.
Eigen::Matrix<double, 3, Eigen::Dynamic> check_point_jacobian(const KinematicChain& chain,
                                                              const JointConfig& q,
                                                              const CheckPoint& point);

struct IKOptions {
  double damping{1e-3};
  double max_step{0.2};
  int max_iterations{200};
  double tolerance{1e-6};
};

/// Damped least squares on the 6-D pose residual, started from `seed` and
/// clamped to the joint limits each step. Converges to the branch nearest
/// the seed. Throws NoConvergence when the residual stays above tolerance.
JointConfig inverse_kinematics(const KinematicChain& chain, const Pose& target,
                               const JointConfig& seed, const MechanicalLimits& limits,
                               const IKOptions& options = {});

}  // namespace gomp
