#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "gomp/interpolation.hpp"
#include "gomp/trajopt.hpp"

namespace gomp {

/// One feasible horizon found by the shrink loop.
struct HorizonRecord {
  int h{0};
  double duration_s{0.0};
  int sqp_iterations{0};
};

enum class StopReason {
  Infeasible,       ///< the next horizon's SQP was infeasible (or its QP hit the cap)
  IterationCapped,  ///< the next horizon's SQP ran out of iterations
  Deadline,         ///< wall-clock budget spent
  MinimumHorizon,   ///< reached h = 2
};
const char* to_string(StopReason r);

struct TrajectorySolution {
  TrajectoryVariables variables;
  /// Every feasible horizon, in the order found (decreasing h unless
  /// binary search is enabled).
  std::vector<HorizonRecord> history;
  StopReason stop_reason{StopReason::Infeasible};
  int horizons_tried{0};
  /// Grasp candidate the trajectory starts at, when known.
  int grasp_index{-1};
  /// All feasible trajectories in `history` order, when requested.
  std::vector<TrajectoryVariables> feasible;

  int H() const { return variables.H; }
  double t_step() const { return variables.t_step; }
  double duration() const { return variables.H * variables.t_step; }
};

struct PlanRequest {
  GraspFrame start;
  GraspFrame goal;
  int H_init{60};
  double t_step{0.008};
  MechanicalLimits limits;
  KinematicChain chain;
  DepthField depth;
  JointConfig home;
  std::vector<CheckPoint> check_points;
  std::optional<std::chrono::milliseconds> deadline;
  TrustRegionState trust;
  SQPSettings sqp;
  /// Experimental: bisect on h instead of decrementing.
  bool binary_search{false};
  /// Keep every feasible trajectory in TrajectorySolution::feasible.
  bool keep_all{false};

  TrajectoryProblem problem() const;
  void validate() const;
};

/// Horizon-shrinking time minimization. The first horizon starts from a
/// spline between inverse-kinematics solutions (seeded from `home`); later
/// horizons are warm-started from the previous solution. Returns the last
/// converged trajectory; throws NoTrajectory if the first horizon fails or
/// the endpoints are unreachable.
TrajectorySolution plan_min_time(const PlanRequest& req);

struct GraspPlanRecord {
  int index{0};
  bool ok{false};
  std::string reason;  ///< failure reason when !ok
  double duration_s{0.0};
  int horizons_tried{0};
  double wall_ms{0.0};
};

struct GraspSetResult {
  int best_index{-1};
  TrajectorySolution solution;
  std::vector<GraspPlanRecord> per_grasp;  ///< one entry per input grasp, in input order
  std::vector<std::optional<TrajectorySolution>> solutions;  ///< parallel to per_grasp
};

/// Plans from every grasp (overriding `base.start`) to `base.goal`, on up to
/// `jobs` threads, and picks the shortest duration; ties go to the lowest
/// index. Throws NoTrajectory when every grasp fails.
GraspSetResult plan_grasp_set(const std::vector<GraspFrame>& grasps, const PlanRequest& base,
                              int jobs = 1);

/// Trapezoidal (or triangular) minimum time to move `distance` from rest to rest.
double trapezoid_min_time(double distance, double v_max, double a_max);

struct BaselineSegments {
  double lift_s{0.0};
  double move_s{0.0};
  double lower_s{0.0};
};

struct BaselineResult {
  TrajectorySolution solution;
  BaselineSegments segments;
};

/// Lift to `safe_z`, move over the goal, lower: three synchronized joint-space
/// trapezoids at `speed_fraction` of the limits, each starting and ending at
/// rest and rounded up to a multiple of t_step. The nominal grasp orientation
/// is used throughout. Throws NoTrajectory when inverse kinematics fails.
BaselineResult baseline_plan(const GraspFrame& start, const GraspFrame& goal, double safe_z,
                             const MechanicalLimits& limits, const KinematicChain& chain,
                             double t_step, const JointConfig& home, double speed_fraction = 0.25);

struct PipelinePhases {
  double imaging{0.0};
  double grasp_analysis{0.0};
  double gripper_close{0.0};
  double gripper_open{0.0};
};

double estimate_pick_time(const PipelinePhases& phases, double motion_to_grasp,
                          double motion_to_place);

}  // namespace gomp
