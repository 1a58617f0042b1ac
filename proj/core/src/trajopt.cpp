#include "gomp/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "gomp/errors.hpp"
#include "gomp/interpolation.hpp"

namespace gomp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Triplets = std::vector<Eigen::Triplet<double>>;

struct RowBuilder {
  Triplets triplets;
  std::vector<double> lower;
  std::vector<double> upper;

  Eigen::Index add(double lo, double hi) {
    lower.push_back(lo);
    upper.push_back(hi);
    return static_cast<Eigen::Index>(lower.size()) - 1;
  }
  void coeff(Eigen::Index row, Eigen::Index col, double value) {
    if (value != 0.0) triplets.emplace_back(row, col, value);
  }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(lower.size()); }
};

void append_dynamics(RowBuilder& rb, int H, int n, double t_step, const MechanicalLimits& limits) {
  const TrajectoryVariables layout(H, n, t_step);
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto r = rb.add(0.0, 0.0);
      rb.coeff(r, layout.q_index(i + 1) + j, 1.0);
      rb.coeff(r, layout.q_index(i) + j, -1.0);
      rb.coeff(r, layout.v_index(i) + j, -t_step);
    }
  }
  for (int i = 0; i <= H; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto r = rb.add(limits.q_min[j], limits.q_max[j]);
      rb.coeff(r, layout.q_index(i) + j, 1.0);
    }
  }
  for (int i = 0; i <= H; ++i) {
    const bool boundary = i == 0 || i == H;
    for (int j = 0; j < n; ++j) {
      const auto r = boundary ? rb.add(0.0, 0.0) : rb.add(-limits.v_max[j], limits.v_max[j]);
      rb.coeff(r, layout.v_index(i) + j, 1.0);
    }
  }
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dv = limits.a_max[j] * t_step;
      const auto r = rb.add(-dv, dv);
      rb.coeff(r, layout.v_index(i + 1) + j, 1.0);
      rb.coeff(r, layout.v_index(i) + j, -1.0);
    }
  }
}

Eigen::Index q_box_row(int H, int n, int waypoint, int joint) {
  return static_cast<Eigen::Index>(H) * n + static_cast<Eigen::Index>(waypoint) * n + joint;
}

std::vector<std::optional<CheckPoint>> check_points(const TrajectoryProblem& problem) {
  std::vector<std::optional<CheckPoint>> pts{std::nullopt};
  for (const auto& p : problem.extra_check_points) pts.emplace_back(p);
  return pts;
}

double point_height(const KinematicChain& chain, const JointConfig& q,
                    const std::optional<CheckPoint>& point, Eigen::Vector3d* position) {
  const Eigen::Vector3d p =
      point ? check_point_position(chain, q, *point) : forward_kinematics(chain, q).translation;
  if (position != nullptr) *position = p;
  return p.z();
}

Eigen::RowVectorXd point_jacobian_z(const KinematicChain& chain, const JointConfig& q,
                                    const std::optional<CheckPoint>& point) {
  if (point) return check_point_jacobian(chain, q, *point).row(2);
  return jacobian(chain, q).row(2);
}

// Largest gap between the true nonlinear constraint values at `next` and
// their linearization at `prev`.
double linearization_gap(const TrajectoryProblem& problem, const TrajectoryVariables& prev,
                         const TrajectoryVariables& next) {
  double gap = 0.0;
  const auto pts = check_points(problem);
  for (int i = 0; i <= prev.H; ++i) {
    const JointConfig qk = prev.q(i);
    const JointConfig qn = next.q(i);
    for (const auto& pt : pts) {
      const double zk = point_height(problem.chain, qk, pt, nullptr);
      const double zn = point_height(problem.chain, qn, pt, nullptr);
      const double predicted = zk + point_jacobian_z(problem.chain, qk, pt).dot(qn - qk);
      gap = std::max(gap, std::abs(zn - predicted));
    }
  }
  auto pose_gap = [&](const GraspFrame& frame, const JointConfig& qk, const JointConfig& qn) {
    const PoseRows rows = linearize_pose_constraint(qk, frame, problem.chain);
    const Vector6d predicted = rows.residual - rows.coeffs * (qn - qk);
    const Vector6d actual = frame.residual(forward_kinematics(problem.chain, qn));
    Vector6d diff = actual - predicted;
    if (frame.freedom == FreeRotation::Any) diff.tail<3>().setZero();
    return diff.cwiseAbs().maxCoeff();
  };
  gap = std::max(gap, pose_gap(problem.start, prev.q(0), next.q(0)));
  gap = std::max(gap, pose_gap(problem.goal, prev.q(prev.H), next.q(next.H)));
  return gap;
}

}  // namespace

// ---------------------------------------------------------------------------

TrajectoryVariables::TrajectoryVariables(int horizon, int joints, double step)
    : H(horizon), n(joints), t_step(step), x(Eigen::VectorXd::Zero(size_for(horizon, joints))) {}

void TrajectoryVariables::validate() const {
  if (H < 1 || n < 1) throw std::invalid_argument("trajectory needs H >= 1 and n >= 1");
  if (!(t_step > 0)) throw std::invalid_argument("t_step must be positive");
  if (x.size() != size_for(H, n)) throw DimensionMismatch("trajectory vector must have 2n(H+1) entries");
}

void TrustRegionState::validate() const {
  if (!(0 < shrink_factor && shrink_factor < 1 && 1 < grow_factor))
    throw ValidationError("planner.trust_region", "requires 0 < shrink < 1 < grow");
  if (!(min_radius > 0) || radius_q0 < min_radius || radius_qH < min_radius || max_radius < min_radius)
    throw ValidationError("planner.trust_region.radius", "radii must be at least min_radius");
  if (!(obstacle_margin >= 0)) throw ValidationError("planner.clearance_margin", "must be non-negative");
}

QPSettings SQPSettings::default_qp_settings() {
  QPSettings s;
  s.eps_abs = 1e-6;
  s.eps_rel = 1e-6;
  s.max_iter = 4000;
  return s;
}

const char* to_string(SQPStatus status) {
  switch (status) {
    case SQPStatus::Converged: return "converged";
    case SQPStatus::Infeasible: return "infeasible";
    case SQPStatus::IterationCapped: return "iteration_capped";
  }
  return "unknown";
}

Eigen::MatrixXd velocity_objective_block(int H) {
  if (H < 1) throw std::invalid_argument("horizon must be at least 1");
  Eigen::MatrixXd pv = Eigen::MatrixXd::Zero(H + 1, H + 1);
  for (int i = 0; i <= H; ++i) {
    pv(i, i) = 2.0;
    if (i > 0) pv(i, i - 1) = -1.0;
    if (i < H) pv(i, i + 1) = -1.0;
  }
  return pv;
}

SparseMatrix build_objective(int H, int n) {
  const TrajectoryVariables layout(H, n, 1.0);
  Triplets t;
  for (int i = 0; i <= H; ++i) {
    for (int j = 0; j < n; ++j) {
      t.emplace_back(layout.v_index(i) + j, layout.v_index(i) + j, 2.0);
      if (i < H) {
        t.emplace_back(layout.v_index(i) + j, layout.v_index(i + 1) + j, -1.0);
        t.emplace_back(layout.v_index(i + 1) + j, layout.v_index(i) + j, -1.0);
      }
    }
  }
  const auto d = TrajectoryVariables::size_for(H, n);
  SparseMatrix p(d, d);
  p.setFromTriplets(t.begin(), t.end());
  return p;
}

ConstraintBlock build_dynamics_constraints(int H, int n, double t_step,
                                           const MechanicalLimits& limits) {
  if (!(t_step > 0)) throw std::invalid_argument("t_step must be positive");
  if (limits.joint_count() != n) throw DimensionMismatch("limits do not match joint count");
  RowBuilder rb;
  append_dynamics(rb, H, n, t_step, limits);
  ConstraintBlock block;
  block.A.resize(rb.rows(), TrajectoryVariables::size_for(H, n));
  block.A.setFromTriplets(rb.triplets.begin(), rb.triplets.end());
  block.lower = Eigen::Map<const Eigen::VectorXd>(rb.lower.data(), rb.rows());
  block.upper = Eigen::Map<const Eigen::VectorXd>(rb.upper.data(), rb.rows());
  return block;
}

LinearRow linearize_obstacle(const JointConfig& q_k, const KinematicChain& chain,
                             const DepthField& depth, double margin,
                             const std::optional<CheckPoint>& point) {
  Eigen::Vector3d p;
  const double z = point_height(chain, q_k, point, &p);
  LinearRow row;
  row.coeffs = point_jacobian_z(chain, q_k, point);
  const double z_obs = query_height(depth, p.head<2>()) + margin;
  row.lower = z_obs - z + row.coeffs.dot(q_k);
  row.upper = kInf;
  return row;
}

PoseRows linearize_pose_constraint(const JointConfig& q_k, const GraspFrame& frame,
                                   const KinematicChain& chain) {
  const Pose current = forward_kinematics(chain, q_k);
  const Jacobian j = jacobian(chain, q_k);
  const Vector6d err = pose_error(frame.pose, current);
  const Eigen::Matrix3d rot = frame.error_rotation();
  // residual(q) ~ residual(q_k) - M (q - q_k)
  Eigen::Matrix<double, 6, Eigen::Dynamic> m(6, chain.joint_count());
  m.topRows<3>() = j.topRows<3>();
  m.bottomRows<3>() = rot * so3_right_jacobian_inverse(err.tail<3>()) * j.bottomRows<3>();
  PoseRows rows;
  rows.residual = frame.residual(current);
  rows.coeffs = m;
  const ResidualBounds b = frame.bounds();
  const Vector6d base = rows.residual + m * q_k;
  for (int k = 0; k < 6; ++k) {
    rows.lower[k] = std::isfinite(b.upper[k]) ? base[k] - b.upper[k] : -kInf;
    rows.upper[k] = std::isfinite(b.lower[k]) ? base[k] - b.lower[k] : kInf;
  }
  return rows;
}

double nonlinear_violation(const TrajectoryProblem& problem, const TrajectoryVariables& vars,
                           double margin) {
  if (!vars.x.allFinite()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  worst = std::max(worst, problem.start.violation(forward_kinematics(problem.chain, vars.q(0))));
  worst = std::max(worst, problem.goal.violation(forward_kinematics(problem.chain, vars.q(vars.H))));
  const auto pts = check_points(problem);
  for (int i = 0; i <= vars.H; ++i) {
    const JointConfig q = vars.q(i);
    for (const auto& pt : pts) {
      Eigen::Vector3d p;
      const double z = point_height(problem.chain, q, pt, &p);
      worst = std::max(worst, query_height(problem.depth, p.head<2>()) + margin - z);
    }
  }
  return worst;
}

QuadraticProgram build_trajectory_qp(const TrajectoryProblem& problem,
                                     const TrajectoryVariables& lin, const TrustRegionState& trust) {
  const int H = lin.H;
  const int n = lin.n;
  RowBuilder rb;
  append_dynamics(rb, H, n, lin.t_step, problem.limits);

  // Endpoint trust regions tighten the position boxes.
  auto tighten = [&](int waypoint, double radius) {
    for (int j = 0; j < n; ++j) {
      const auto r = q_box_row(H, n, waypoint, j);
      const double center = lin.q(waypoint)[j];
      double lo = std::max(rb.lower[r], center - radius);
      double hi = std::min(rb.upper[r], center + radius);
      if (lo > hi) lo = hi = std::clamp(center, rb.lower[r], rb.upper[r]);
      rb.lower[r] = lo;
      rb.upper[r] = hi;
    }
  };
  tighten(0, trust.radius_q0);
  tighten(H, trust.radius_qH);

  const auto pts = check_points(problem);
  for (int i = 0; i <= H; ++i) {
    const JointConfig qk = lin.q(i);
    for (const auto& pt : pts) {
      const LinearRow row = linearize_obstacle(qk, problem.chain, problem.depth, trust.obstacle_margin, pt);
      const auto r = rb.add(row.lower, row.upper);
      for (int j = 0; j < n; ++j) rb.coeff(r, lin.q_index(i) + j, row.coeffs[j]);
    }
  }

  auto add_pose = [&](const GraspFrame& frame, int waypoint) {
    const PoseRows rows = linearize_pose_constraint(lin.q(waypoint), frame, problem.chain);
    for (int k = 0; k < 6; ++k) {
      const auto r = rb.add(rows.lower[k], rows.upper[k]);
      for (int j = 0; j < n; ++j) rb.coeff(r, lin.q_index(waypoint) + j, rows.coeffs(k, j));
    }
  };
  add_pose(problem.start, 0);
  add_pose(problem.goal, H);

  QuadraticProgram qp;
  qp.P = build_objective(H, n);
  qp.p = Eigen::VectorXd::Zero(lin.x.size());
  qp.A.resize(rb.rows(), lin.x.size());
  qp.A.setFromTriplets(rb.triplets.begin(), rb.triplets.end());
  qp.lower = Eigen::Map<const Eigen::VectorXd>(rb.lower.data(), rb.rows());
  qp.upper = Eigen::Map<const Eigen::VectorXd>(rb.upper.data(), rb.rows());
  return qp;
}

namespace {

// Linear rows (dynamics, limits, boundary velocities) must hold far tighter
// than the ADMM stopping tolerance guarantees for an unpolished solution.
constexpr double kLinearFeasibilityTol = 1e-7;

double linear_residual(const QuadraticProgram& qp, const Eigen::VectorXd& x) {
  const Eigen::VectorXd ax = qp.A * x;
  return std::max({0.0, (ax - qp.upper).maxCoeff(), (qp.lower - ax).maxCoeff()});
}

// Re-solves from the given point with tight tolerances when the linear rows
// are not yet satisfied to kLinearFeasibilityTol.
QPResult refine(const QuadraticProgram& qp, QPResult res, const QPSettings& base) {
  if (res.status != QPStatus::Solved || linear_residual(qp, res.x) <= kLinearFeasibilityTol) return res;
  QPSettings tight = base;
  tight.eps_abs = 0.1 * kLinearFeasibilityTol;
  tight.eps_rel = 0.0;
  tight.max_iter = 5 * base.max_iter;
  QPSolver solver(tight);
  const WarmStart ws{res.x, res.y};
  QPResult fine = solver.solve(qp, &ws);
  if (fine.status == QPStatus::Solved && fine.x.allFinite() &&
      linear_residual(qp, fine.x) < linear_residual(qp, res.x))
    return fine;
  return res;
}

}  // namespace

SQPOutcome sqp_solve(const TrajectoryProblem& problem, int H, double t_step,
                     const TrajectoryVariables* warm, TrustRegionState trust,
                     const SQPSettings& settings) {
  if (H < 2) throw std::invalid_argument("horizon must be at least 2");
  const int n = problem.chain.joint_count();
  trust.validate();

  TrajectoryVariables current;
  if (warm != nullptr) {
    current = *warm;
    current.validate();
    if (current.H != H || current.n != n) throw DimensionMismatch("warm start has the wrong shape");
    current.t_step = t_step;
  } else {
    const JointConfig q0 = inverse_kinematics(problem.chain, problem.start.pose, problem.home, problem.limits);
    const JointConfig qH = inverse_kinematics(problem.chain, problem.goal.pose, problem.home, problem.limits);
    current = spline_init(q0, qH, H, t_step);
  }

  SQPOutcome out;
  QPSolver solver(settings.qp);
  std::optional<Eigen::VectorXd> dual;
  double prev_violation = nonlinear_violation(problem, current, trust.obstacle_margin);

  for (int it = 1; it <= settings.i_max; ++it) {
    const QuadraticProgram qp = build_trajectory_qp(problem, current, trust);
    const WarmStart ws{current.x, dual};
    QPResult res = solver.solve(qp, &ws);
    out.inner_iterations = it;
    out.last_qp_status = res.status;

    SQPIterationRecord rec;
    rec.iteration = it;
    rec.radius_q0 = trust.radius_q0;
    rec.radius_qH = trust.radius_qH;
    rec.qp_status = res.status;
    rec.qp_iterations = res.iterations;
    if (res.status != QPStatus::Solved || !res.x.allFinite()) {
      out.trace.push_back(rec);
      out.status = SQPStatus::Infeasible;
      return out;
    }

    TrajectoryVariables next = current;
    next.x = res.x;
    double violation = nonlinear_violation(problem, next, trust.obstacle_margin);
    double gap = linearization_gap(problem, current, next);
    if (violation <= settings.constraint_tol && gap <= settings.linearization_tol &&
        linear_residual(qp, res.x) > kLinearFeasibilityTol) {
      // About to converge on an unpolished point: tighten it first.
      res = refine(qp, res, settings.qp);
      next.x = res.x;
      violation = nonlinear_violation(problem, next, trust.obstacle_margin);
      gap = linearization_gap(problem, current, next);
    }
    rec.objective = res.objective;
    rec.max_violation = violation;
    rec.linearization_gap = gap;
    out.trace.push_back(rec);
    out.max_constraint_violation = violation;

    if (violation <= settings.constraint_tol && gap <= settings.linearization_tol &&
        linear_residual(qp, res.x) <= kLinearFeasibilityTol) {
      out.status = SQPStatus::Converged;
      out.variables = std::move(next);
      return out;
    }

    const double scale = violation > prev_violation ? trust.shrink_factor : trust.grow_factor;
    trust.radius_q0 = std::clamp(trust.radius_q0 * scale, trust.min_radius, trust.max_radius);
    trust.radius_qH = std::clamp(trust.radius_qH * scale, trust.min_radius, trust.max_radius);
    prev_violation = violation;
    current = std::move(next);
    dual = res.y;
  }
  out.status = SQPStatus::IterationCapped;
  out.variables = current;
  return out;
}

void write_sqp_trace_csv(const std::vector<SQPIterationRecord>& trace, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "iteration,objective,max_residual,radius_q0,radius_qH\n";
  f.precision(12);
  for (const auto& r : trace) {
    f << r.iteration << ',' << r.objective << ',' << r.max_violation << ',' << r.radius_q0 << ','
      << r.radius_qH << '\n';
  }
}

}  // namespace gomp
