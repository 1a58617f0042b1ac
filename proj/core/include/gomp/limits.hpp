#pragma once

#include <Eigen/Core>

namespace gomp {

/// Per-joint mechanical limits. Minimum velocity and acceleration are the
/// negated maxima.
struct MechanicalLimits {
  Eigen::VectorXd q_min;
  Eigen::VectorXd q_max;
  Eigen::VectorXd v_max;
  Eigen::VectorXd a_max;

  int joint_count() const { return static_cast<int>(q_min.size()); }

  /// Uniform limits for an n-joint arm.
  static MechanicalLimits uniform(int n, double q_abs, double v_max, double a_max);

  /// Throws ValidationError naming the offending field (prefixed by `path`).
  void validate(const char* path = "limits") const;

  bool contains(const Eigen::VectorXd& q) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& q) const;

  bool operator==(const MechanicalLimits& o) const {
    return q_min == o.q_min && q_max == o.q_max && v_max == o.v_max && a_max == o.a_max;
  }
};

}  // namespace gomp
