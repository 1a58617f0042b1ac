#include "gomp/validate.hpp"

#include <cmath>
#include <sstream>

namespace gomp {

std::string Violation::describe() const {
  std::ostringstream os;
  os << constraint;
  if (waypoint >= 0) os << " at waypoint " << waypoint;
  if (joint >= 0) os << " joint " << joint;
  os << " exceeded by " << magnitude;
  return os.str();
}

ValidationReport validate_trajectory(const TrajectoryProblem& problem, const TrajectoryVariables& vars,
                                     const ValidationTolerances& tol) {
  vars.validate();
  const auto& lim = problem.limits;
  if (vars.n != problem.chain.joint_count() || lim.joint_count() != vars.n)
    throw DimensionMismatch("trajectory does not match the robot");

  ValidationReport report;
  auto flag = [&](const char* what, int i, int j, double excess) {
    // NaN must fail too, hence the negated comparison.
    if (!(excess <= 0.0)) report.violations.push_back({what, i, j, std::isnan(excess) ? INFINITY : excess});
  };

  const int H = vars.H;
  const double t = vars.t_step;
  for (int i = 0; i <= H; ++i) {
    const auto q = vars.q(i);
    const auto v = vars.v(i);
    for (int j = 0; j < vars.n; ++j) {
      flag("joint_limit", i, j,
           std::max(lim.q_min[j] - q[j], q[j] - lim.q_max[j]) - tol.joint_limit);
      flag("velocity_limit", i, j, std::abs(v[j]) - lim.v_max[j] - tol.velocity);
      if (i < H) {
        const double acc = (vars.v(i + 1)[j] - v[j]) / t;
        flag("acceleration_limit", i, j, std::abs(acc) - lim.a_max[j] - tol.acceleration);
        const double dyn = vars.q(i + 1)[j] - q[j] - t * v[j];
        flag("dynamics", i, j, std::abs(dyn) - tol.dynamics);
      }
    }
  }
  for (int i : {0, H}) {
    flag("boundary_velocity", i, -1, vars.v(i).cwiseAbs().maxCoeff() - tol.boundary_velocity);
  }

  flag("start_pose", 0, -1,
       problem.start.violation(forward_kinematics(problem.chain, vars.q(0))) - tol.pose);
  flag("goal_pose", H, -1,
       problem.goal.violation(forward_kinematics(problem.chain, vars.q(H))) - tol.pose);

  for (int i = 0; i <= H; ++i) {
    const JointConfig q = vars.q(i);
    const Eigen::Vector3d tool = forward_kinematics(problem.chain, q).translation;
    flag("obstacle", i, -1, query_height(problem.depth, tool.head<2>()) - tool.z() - tol.obstacle);
    for (const auto& cp : problem.extra_check_points) {
      const Eigen::Vector3d p = check_point_position(problem.chain, q, cp);
      flag("obstacle_check_point", i, cp.link, query_height(problem.depth, p.head<2>()) - p.z() - tol.obstacle);
    }
  }
  return report;
}

}  // namespace gomp
