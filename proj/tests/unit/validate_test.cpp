#include "gomp/validate.hpp"

#include <algorithm>
#include <limits>

#include <gtest/gtest.h>

#include "gomp/timeopt.hpp"
#include "oracles.hpp"

namespace gomp {
namespace {

bool flags(const ValidationReport& r, const std::string& what) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Violation& v) { return v.constraint == what; });
}

class Validate : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const SceneConfig s = oracle::one_joint_scene(0.8, 3.0, 10.0, 0.01, 60);
    problem_ = new TrajectoryProblem(s.request(0).problem());
    solution_ = new TrajectoryVariables(plan_min_time(s.request(0)).variables);
  }
  static void TearDownTestSuite() {
    delete problem_;
    delete solution_;
  }
  static TrajectoryProblem* problem_;
  static TrajectoryVariables* solution_;
  TrajectoryProblem problem = *problem_;
  TrajectoryVariables x = *solution_;
};

TrajectoryProblem* Validate::problem_ = nullptr;
TrajectoryVariables* Validate::solution_ = nullptr;

TEST_F(Validate, PlannedTrajectoryPasses) {
  const ValidationReport r = validate_trajectory(problem, x);
  for (const auto& v : r.violations) ADD_FAILURE() << v.describe();
  EXPECT_TRUE(r.ok());
}

TEST_F(Validate, JointLimit) {
  problem.limits.q_max[0] = 0.3;
  EXPECT_TRUE(flags(validate_trajectory(problem, x), "joint_limit"));
}

TEST_F(Validate, VelocityLimit) {
  problem.limits.v_max *= 0.5;
  EXPECT_TRUE(flags(validate_trajectory(problem, x), "velocity_limit"));
}

TEST_F(Validate, AccelerationLimit) {
  problem.limits.a_max *= 0.5;
  EXPECT_TRUE(flags(validate_trajectory(problem, x), "acceleration_limit"));
}

TEST_F(Validate, DynamicsResidual) {
  x.q(x.H / 2)[0] += 1e-3;
  EXPECT_TRUE(flags(validate_trajectory(problem, x), "dynamics"));
}

TEST_F(Validate, BoundaryVelocity) {
  x.v(x.H)[0] = 1e-3;
  const ValidationReport r = validate_trajectory(problem, x);
  EXPECT_TRUE(flags(r, "boundary_velocity"));
  const auto it = std::find_if(r.violations.begin(), r.violations.end(),
                               [](const Violation& v) { return v.constraint == "boundary_velocity"; });
  EXPECT_EQ(it->waypoint, x.H);
  EXPECT_NE(it->describe().find("boundary_velocity at waypoint"), std::string::npos);
}

TEST_F(Validate, EndpointPoses) {
  problem.goal.pose.translation.z() += 0.01;
  const ValidationReport r = validate_trajectory(problem, x);
  EXPECT_TRUE(flags(r, "goal_pose"));
  EXPECT_FALSE(flags(r, "start_pose"));
}

TEST_F(Validate, ObstacleAtAnyWaypoint) {
  // A pillar under the midpoint of the swing, taller than the tool height.
  const Eigen::Vector3d mid = forward_kinematics(problem.chain, x.q(x.H / 2)).translation;
  DepthField& d = problem.depth;
  const int ix = static_cast<int>((mid.x() - d.origin.x()) / d.resolution);
  const int iy = static_cast<int>((mid.y() - d.origin.y()) / d.resolution);
  d.cell(ix, iy) = 0.35;
  EXPECT_TRUE(flags(validate_trajectory(problem, x), "obstacle"));
}

TEST_F(Validate, NonFiniteValuesFail) {
  x.v(3)[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(validate_trajectory(problem, x).ok());
}

TEST_F(Validate, ToleranceControlsAcceptance) {
  x.q(x.H / 2)[0] += 5e-6;
  EXPECT_TRUE(validate_trajectory(problem, x).ok());
  ValidationTolerances strict;
  strict.dynamics = 1e-6;
  EXPECT_FALSE(validate_trajectory(problem, x, strict).ok());
}

TEST_F(Validate, WrongJointCountThrows) {
  TrajectoryVariables y(x.H, 2, x.t_step);
  y.x.setZero();
  EXPECT_THROW(validate_trajectory(problem, y), DimensionMismatch);
}

}  // namespace
}  // namespace gomp
