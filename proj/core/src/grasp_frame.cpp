#include "gomp/grasp_frame.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gomp/errors.hpp"

namespace gomp {

const char* to_string(FreeRotation f) {
  switch (f) {
    case FreeRotation::None: return "none";
    case FreeRotation::Axis: return "axis";
    case FreeRotation::Any: return "any";
  }
  return "none";
}

GraspFrame GraspFrame::top_down(const Eigen::Vector3d& position, double yaw) {
  GraspFrame g;
  g.pose.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix() *
                    Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitX()).toRotationMatrix();
  g.pose.translation = position;
  return g;
}

GraspFrame GraspFrame::with_rotation_range(double half_width) const {
  GraspFrame g = *this;
  g.freedom = FreeRotation::Axis;
  g.theta_lo = -half_width;
  g.theta_hi = half_width;
  return g;
}

Eigen::Matrix3d GraspFrame::error_rotation() const {
  if (freedom != FreeRotation::Axis) return Eigen::Matrix3d::Identity();
  // Rows: two directions orthogonal to the axis, then minus the axis so the
  // last component equals the rotation angle theta of member(theta).
  const Eigen::Vector3d a = world_axis().normalized();
  Eigen::Vector3d helper = std::abs(a.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d b1 = (helper - helper.dot(a) * a).normalized();
  const Eigen::Vector3d b2 = a.cross(b1);
  Eigen::Matrix3d r;
  r.row(0) = b1.transpose();
  r.row(1) = b2.transpose();
  r.row(2) = -a.transpose();
  return r;
}

Vector6d GraspFrame::residual(const Pose& current) const {
  const Vector6d e = pose_error(pose, current);
  Vector6d r;
  r.head<3>() = e.head<3>();
  r.tail<3>() = error_rotation() * e.tail<3>();
  return r;
}

ResidualBounds GraspFrame::bounds() const {
  ResidualBounds b{-epsilon, epsilon};
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (freedom) {
    case FreeRotation::None: break;
    case FreeRotation::Axis:
      b.lower[5] = theta_lo - epsilon[5];
      b.upper[5] = theta_hi + epsilon[5];
      break;
    case FreeRotation::Any:
      b.lower.tail<3>().setConstant(-inf);
      b.upper.tail<3>().setConstant(inf);
      break;
  }
  return b;
}

double GraspFrame::violation(const Pose& current) const {
  const Vector6d r = residual(current);
  const ResidualBounds b = bounds();
  return std::max({0.0, (r - b.upper).maxCoeff(), (b.lower - r).maxCoeff()});
}

Pose GraspFrame::member(double theta) const {
  Pose p = pose;
  p.rotation = Eigen::AngleAxisd(theta, world_axis().normalized()).toRotationMatrix() * pose.rotation;
  return p;
}

void GraspFrame::validate(const std::string& path) const {
  if (!pose.is_valid()) throw ValidationError(path + ".quaternion", "rotation is not proper orthonormal");
  if (!pose.translation.allFinite()) throw ValidationError(path + ".position", "must be finite");
  if (freedom == FreeRotation::Axis) {
    if (!free_axis.allFinite() || std::abs(free_axis.norm() - 1.0) > 1e-9)
      throw ValidationError(path + ".free_axis", "must be a unit vector");
    if (!(theta_lo <= 0.0 && 0.0 <= theta_hi) || !std::isfinite(theta_lo) || !std::isfinite(theta_hi))
      throw ValidationError(path + ".rotation_range", "requires lo <= 0 <= hi");
  }
  for (int k = 0; k < 6; ++k) {
    if (!std::isfinite(epsilon[k]) || epsilon[k] < 0)
      throw ValidationError(path + ".epsilon[" + std::to_string(k) + "]", "must be non-negative");
  }
}

bool GraspFrame::operator==(const GraspFrame& o) const {
  return pose.rotation == o.pose.rotation && pose.translation == o.pose.translation &&
         freedom == o.freedom && free_axis == o.free_axis && theta_lo == o.theta_lo &&
         theta_hi == o.theta_hi && epsilon == o.epsilon;
}

}  // namespace gomp
