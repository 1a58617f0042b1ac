#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "gomp/depth_field.hpp"
#include "gomp/grasp_frame.hpp"
#include "gomp/kinematics.hpp"
#include "gomp/limits.hpp"
#include "gomp/qp.hpp"

namespace gomp {

/// Stacked decision vector [q_0 ... q_H, v_0 ... v_H] at a fixed interval.
struct TrajectoryVariables {
  int H{0};
  int n{0};
  double t_step{0.0};
  Eigen::VectorXd x;

  TrajectoryVariables() = default;
  TrajectoryVariables(int horizon, int joints, double step);

  static Eigen::Index size_for(int horizon, int joints) { return 2L * joints * (horizon + 1); }

  Eigen::Index q_index(int i) const { return static_cast<Eigen::Index>(i) * n; }
  Eigen::Index v_index(int i) const { return static_cast<Eigen::Index>(H + 1 + i) * n; }

  auto q(int i) { return x.segment(q_index(i), n); }
  auto q(int i) const { return x.segment(q_index(i), n); }
  auto v(int i) { return x.segment(v_index(i), n); }
  auto v(int i) const { return x.segment(v_index(i), n); }

  double duration() const { return H * t_step; }

  /// Throws DimensionMismatch / std::invalid_argument when inconsistent.
  void validate() const;
};

/// Trust-region box on the endpoint configurations plus the obstacle clearance.
struct TrustRegionState {
  double radius_q0{0.5};
  double radius_qH{0.5};
  double obstacle_margin{0.01};
  double shrink_factor{0.5};
  double grow_factor{1.5};
  double min_radius{1e-3};
  double max_radius{0.5};

  void validate() const;
};

/// Everything about a planning instance that does not depend on the horizon.
struct TrajectoryProblem {
  KinematicChain chain;
  MechanicalLimits limits;
  GraspFrame start;
  GraspFrame goal;
  DepthField depth;
  /// Seed configuration for endpoint inverse kinematics.
  JointConfig home;
  /// Obstacle check points; the tool origin is always checked.
  std::vector<CheckPoint> extra_check_points;
};

struct SQPSettings {
  int i_max{20};
  double constraint_tol{1e-4};
  double linearization_tol{1e-4};
  QPSettings qp{default_qp_settings()};

  static QPSettings default_qp_settings();
};

enum class SQPStatus { Converged, Infeasible, IterationCapped };
const char* to_string(SQPStatus status);

struct SQPIterationRecord {
  int iteration{0};
  double objective{0.0};
  double max_violation{0.0};
  double linearization_gap{0.0};
  double radius_q0{0.0};
  double radius_qH{0.0};
  QPStatus qp_status{QPStatus::Solved};
  int qp_iterations{0};
};

struct SQPOutcome {
  SQPStatus status{SQPStatus::IterationCapped};
  TrajectoryVariables variables;  ///< valid when Converged
  int inner_iterations{0};
  double max_constraint_violation{std::numeric_limits<double>::infinity()};
  /// Status of the last QP; IterationLimit is reported as Infeasible.
  QPStatus last_qp_status{QPStatus::Solved};
  std::vector<SQPIterationRecord> trace;
};

/// One linear row over a single waypoint's configuration block.
struct LinearRow {
  Eigen::RowVectorXd coeffs;
  double lower{-std::numeric_limits<double>::infinity()};
  double upper{std::numeric_limits<double>::infinity()};
};

/// Six rows over an endpoint configuration block.
struct PoseRows {
  Eigen::Matrix<double, 6, Eigen::Dynamic> coeffs;
  Vector6d lower;
  Vector6d upper;
  Vector6d residual;  ///< true residual at the linearization point
};

/// Rows over the full decision vector.
struct ConstraintBlock {
  SparseMatrix A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Tridiagonal (H+1)x(H+1) velocity block with 2 on the diagonal and -1 beside it.
Eigen::MatrixXd velocity_objective_block(int H);

/// diag(0, P_v kron I_n) over the stacked decision vector.
SparseMatrix build_objective(int H, int n);

/// Dynamics equalities q_{i+1} - q_i - t v_i = 0, position / velocity boxes
/// (with v_0 = v_H = 0 folded into the velocity box), and acceleration rows
/// |v_{i+1} - v_i| <= a_max t. Row order: dynamics, q box, v box, acceleration.
ConstraintBlock build_dynamics_constraints(int H, int n, double t_step,
                                           const MechanicalLimits& limits);

/// J_z q >= z_obs + margin - p_z(q_k) + J_z q_k, with z_obs queried under the
/// check point at q_k.
LinearRow linearize_obstacle(const JointConfig& q_k, const KinematicChain& chain,
                             const DepthField& depth, double margin,
                             const std::optional<CheckPoint>& point = std::nullopt);

/// Linearized grasp-set membership: lower <= coeffs q <= upper.
PoseRows linearize_pose_constraint(const JointConfig& q_k, const GraspFrame& frame,
                                   const KinematicChain& chain);

/// Largest true nonlinear violation (grasp sets, obstacle clearance incl. margin).
double nonlinear_violation(const TrajectoryProblem& problem, const TrajectoryVariables& vars,
                           double margin);

/// Assembles the QP for a linearization point and trust region.
QuadraticProgram build_trajectory_qp(const TrajectoryProblem& problem,
                                     const TrajectoryVariables& linearization,
                                     const TrustRegionState& trust);

/// Sequential QP at a fixed horizon. Without `warm`, starts from a spline
/// between inverse-kinematics solutions of the nominal endpoint frames.
/// Throws NoConvergence if that inverse kinematics fails.
SQPOutcome sqp_solve(const TrajectoryProblem& problem, int H, double t_step,
                     const TrajectoryVariables* warm, TrustRegionState trust,
                     const SQPSettings& settings = {});

/// Writes the iteration trace as CSV (iteration, objective, max residual, radii).
void write_sqp_trace_csv(const std::vector<SQPIterationRecord>& trace, const std::string& path);

}  // namespace gomp
