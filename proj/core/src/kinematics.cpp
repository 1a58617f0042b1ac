#include "gomp/kinematics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "gomp/limits.hpp"

namespace gomp {
namespace {

Pose dh_transform(const DHLink& link, double theta) {
  const double ct = std::cos(theta + link.theta_offset);
  const double st = std::sin(theta + link.theta_offset);
  const double ca = std::cos(link.alpha);
  const double sa = std::sin(link.alpha);
  Pose t;
  t.rotation << ct, -st * ca, st * sa,  //
      st, ct * ca, -ct * sa,            //
      0.0, sa, ca;
  t.translation << link.a * ct, link.a * st, link.d;
  return t;
}

void check_dimension(const KinematicChain& chain, const JointConfig& q) {
  if (q.size() != chain.joint_count()) {
    throw DimensionMismatch("joint configuration has " + std::to_string(q.size()) +
                            " entries, chain has " + std::to_string(chain.joint_count()));
  }
}

// Residual derivative w.r.t. q is -pose_jacobian; the rotational block maps
// world angular velocity through the inverse right Jacobian of the log.
Jacobian pose_residual_jacobian(const Jacobian& j, const Vector6d& error) {
  Jacobian g = j;
  g.bottomRows<3>() = so3_right_jacobian_inverse(error.tail<3>()) * j.bottomRows<3>();
  return g;
}

}  // namespace

KinematicChain::KinematicChain(std::vector<DHLink> links) : links_(std::move(links)) {
  if (links_.empty()) throw std::invalid_argument("kinematic chain needs at least one joint");
  for (const auto& l : links_) {
    if (!std::isfinite(l.a) || !std::isfinite(l.alpha) || !std::isfinite(l.d) ||
        !std::isfinite(l.theta_offset)) {
      throw std::invalid_argument("kinematic chain parameters must be finite");
    }
  }
}

KinematicChain KinematicChain::ur5() {
  constexpr double half_pi = std::numbers::pi / 2;
  return KinematicChain({{0.0, half_pi, 0.089159, 0.0},
                         {-0.425, 0.0, 0.0, 0.0},
                         {-0.39225, 0.0, 0.0, 0.0},
                         {0.0, half_pi, 0.10915, 0.0},
                         {0.0, -half_pi, 0.09465, 0.0},
                         {0.0, 0.0, 0.0823, 0.0}});
}

double KinematicChain::reach() const {
  double r = 0.0;
  for (const auto& l : links_) r += std::hypot(l.a, l.d);
  return r;
}

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
  return {q.normalized().toRotationMatrix(), t};
}

Pose Pose::operator*(const Pose& rhs) const {
  return {rotation * rhs.rotation, rotation * rhs.translation + translation};
}

Eigen::Vector3d Pose::operator*(const Eigen::Vector3d& point) const {
  return rotation * point + translation;
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation.transpose();
  return {rt, -rt * translation};
}

bool Pose::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d s;
  s << 0.0, -w.z(), w.y(),  //
      w.z(), 0.0, -w.x(),   //
      -w.y(), w.x(), 0.0;
  return s;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd aa(Eigen::Quaterniond(rotation).normalized());
  double angle = aa.angle();
  Eigen::Vector3d axis = aa.axis();
  if (angle > std::numbers::pi) {
    angle = 2.0 * std::numbers::pi - angle;
    axis = -axis;
  }
  return angle * axis;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-15) return Eigen::Matrix3d::Identity() + skew(w);
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d s = skew(w);
  double coeff;
  if (theta < 1e-6) {
    coeff = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    coeff = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * s + coeff * s * s;
}

Vector6d pose_error(const Pose& target, const Pose& current) {
  Vector6d e;
  e.head<3>() = target.translation - current.translation;
  e.tail<3>() = so3_log(target.rotation * current.rotation.transpose());
  return e;
}

std::vector<Pose> link_frames(const KinematicChain& chain, const JointConfig& q) {
  check_dimension(chain, q);
  std::vector<Pose> frames;
  frames.reserve(chain.links().size() + 1);
  frames.push_back(Pose::identity());
  for (int i = 0; i < chain.joint_count(); ++i) {
    frames.push_back(frames.back() * dh_transform(chain.links()[i], q[i]));
  }
  return frames;
}

Pose forward_kinematics(const KinematicChain& chain, const JointConfig& q) {
  check_dimension(chain, q);
  Pose t;
  for (int i = 0; i < chain.joint_count(); ++i) t = t * dh_transform(chain.links()[i], q[i]);
  return t;
}

Jacobian jacobian(const KinematicChain& chain, const JointConfig& q) {
  const auto frames = link_frames(chain, q);
  const int n = chain.joint_count();
  const Eigen::Vector3d tool = frames.back().translation;
  Jacobian j(6, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d axis = frames[i].rotation.col(2);
    j.col(i).head<3>() = axis.cross(tool - frames[i].translation);
    j.col(i).tail<3>() = axis;
  }
  return j;
}

Eigen::Vector3d check_point_position(const KinematicChain& chain, const JointConfig& q,
                                     const CheckPoint& point) {
  const auto frames = link_frames(chain, q);
  return frames.at(point.link + 1) * point.offset;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> check_point_jacobian(const KinematicChain& chain,
                                                              const JointConfig& q,
                                                              const CheckPoint& point) {
  const auto frames = link_frames(chain, q);
  const int n = chain.joint_count();
  const Eigen::Vector3d p = frames.at(point.link + 1) * point.offset;
  Eigen::Matrix<double, 3, Eigen::Dynamic> j = Eigen::MatrixXd::Zero(3, n);
  for (int i = 0; i <= point.link; ++i) {
    const Eigen::Vector3d axis = frames[i].rotation.col(2);
    j.col(i) = axis.cross(p - frames[i].translation);
  }
  return j;
}

JointConfig inverse_kinematics(const KinematicChain& chain, const Pose& target,
                               const JointConfig& seed, const MechanicalLimits& limits,
                               const IKOptions& options) {
  check_dimension(chain, seed);
  if (limits.joint_count() != chain.joint_count()) {
    throw DimensionMismatch("limits do not match the chain's joint count");
  }
  if (target.translation.norm() > chain.reach() + options.tolerance) {
    throw NoConvergence("IK target lies outside the workspace");
  }
  const int n = chain.joint_count();
  JointConfig q = limits.clamp(seed);
  Vector6d err = pose_error(target, forward_kinematics(chain, q));
  // Levenberg-Marquardt: damping shrinks after every improving step, so the
  // iteration becomes Gauss-Newton (quadratic) near the root and stays
  // robust near singular configurations.
  const double polish_tol = std::min(options.tolerance * 1e-3, 1e-10);
  double lambda = options.damping;
  for (int it = 0; it < options.max_iterations && err.norm() > polish_tol; ++it) {
    const Jacobian g = pose_residual_jacobian(jacobian(chain, q), err);
    const Eigen::MatrixXd normal =
        g.transpose() * g + lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd step = normal.ldlt().solve(g.transpose() * err);
    const double largest = step.cwiseAbs().maxCoeff();
    if (largest > options.max_step) step *= options.max_step / largest;
    const JointConfig trial = limits.clamp(q + step);
    const Vector6d trial_err = pose_error(target, forward_kinematics(chain, trial));
    if (trial_err.norm() < err.norm()) {
      q = trial;
      err = trial_err;
      lambda = std::max(lambda * 0.1, 1e-12);
    } else {
      lambda = std::min(lambda * 10.0, 1e6);
    }
  }
  if (!(err.norm() <= options.tolerance)) {
    throw NoConvergence("IK residual " + std::to_string(err.norm()) + " above tolerance");
  }
  return q;
}

}  // namespace gomp
