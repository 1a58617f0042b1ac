#include "gomp/timeopt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "gomp/errors.hpp"

namespace gomp {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Rest-to-rest profile over a fixed duration T >= the minimum time: solves for
// the cruise speed so every joint of a segment finishes together.
struct SyncProfile {
  double distance{0.0};
  double accel{0.0};
  double cruise{0.0};
  double T{0.0};

  SyncProfile(double d, double a, double duration) : distance(d), accel(a), T(duration) {
    const double dist = std::abs(d);
    if (dist == 0.0 || T <= 0.0) return;
    const double disc = std::max(0.0, accel * accel * T * T - 4.0 * accel * dist);
    cruise = 0.5 * (accel * T - std::sqrt(disc));
  }

  // Signed displacement and velocity at time tau in [0, T].
  std::pair<double, double> sample(double tau) const {
    if (cruise == 0.0) return {tau >= T ? distance : 0.0, 0.0};
    const double sgn = distance < 0 ? -1.0 : 1.0;
    const double ta = cruise / accel;
    double s;
    double v;
    if (tau <= ta) {
      s = 0.5 * accel * tau * tau;
      v = accel * tau;
    } else if (tau < T - ta) {
      s = 0.5 * accel * ta * ta + cruise * (tau - ta);
      v = cruise;
    } else {
      const double r = std::max(0.0, T - tau);
      s = std::abs(distance) - 0.5 * accel * r * r;
      v = accel * r;
    }
    return {sgn * s, sgn * v};
  }
};

int steps_for(double seconds, double t_step) {
  if (seconds <= 0.0) return 0;
  return static_cast<int>(std::ceil(seconds / t_step - 1e-9));
}

JointConfig solve_ik(const KinematicChain& chain, const Pose& target, const JointConfig& seed,
                     const MechanicalLimits& limits, const char* what) {
  try {
    return inverse_kinematics(chain, target, seed, limits);
  } catch (const NoConvergence& e) {
    throw NoTrajectory(std::string(what) + " unreachable: " + e.what());
  }
}

}  // namespace

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Infeasible: return "infeasible";
    case StopReason::IterationCapped: return "iteration_capped";
    case StopReason::Deadline: return "deadline";
    case StopReason::MinimumHorizon: return "minimum_horizon";
  }
  return "unknown";
}

// --- interpolation ---------------------------------------------------------

TrajectoryVariables spline_init(const JointConfig& q0, const JointConfig& qH, int H, double t_step) {
  if (H < 2) throw std::invalid_argument("spline_init needs H >= 2");
  if (q0.size() != qH.size()) throw DimensionMismatch("spline endpoints differ in size");
  const int n = static_cast<int>(q0.size());
  TrajectoryVariables out(H, n, t_step);
  const Eigen::VectorXd dq = qH - q0;
  const double T = H * t_step;
  for (int i = 0; i <= H; ++i) {
    const double s = static_cast<double>(i) / H;
    out.q(i) = q0 + dq * (3.0 * s * s - 2.0 * s * s * s);
    out.v(i) = dq * ((6.0 * s - 6.0 * s * s) / T);
  }
  out.v(0).setZero();
  out.v(H).setZero();
  return out;
}

TrajectoryVariables shrink_warm_start(const TrajectoryVariables& prev, int new_h) {
  prev.validate();
  const int h = prev.H;
  if (new_h < 2 || new_h > h) throw std::invalid_argument("shrink_warm_start needs 2 <= new_h <= h");
  TrajectoryVariables out(new_h, prev.n, prev.t_step);
  const double scale = static_cast<double>(h) / new_h;
  for (int i = 0; i <= new_h; ++i) {
    const long num = static_cast<long>(i) * h;
    const int k = static_cast<int>(num / new_h);
    const double frac = static_cast<double>(num % new_h) / new_h;
    if (k >= h || frac == 0.0) {
      out.q(i) = prev.q(k);
      out.v(i) = prev.v(k) * scale;
    } else {
      out.q(i) = prev.q(k) + frac * (prev.q(k + 1) - prev.q(k));
      out.v(i) = (prev.v(k) + frac * (prev.v(k + 1) - prev.v(k))) * scale;
    }
  }
  out.v(0).setZero();
  out.v(new_h).setZero();
  return out;
}

// --- time minimization -----------------------------------------------------

TrajectoryProblem PlanRequest::problem() const {
  return TrajectoryProblem{chain, limits, start, goal, depth, home, check_points};
}

void PlanRequest::validate() const {
  if (H_init < 2) throw ValidationError("planner.H_init", "must be at least 2");
  if (!(t_step > 0) || !std::isfinite(t_step)) throw ValidationError("planner.t_step", "must be positive");
  limits.validate();
  if (limits.joint_count() != chain.joint_count())
    throw ValidationError("limits", "joint count does not match the chain");
  if (home.size() != chain.joint_count()) throw ValidationError("robot.home", "joint count does not match the chain");
  start.validate("start");
  goal.validate("goal");
  depth.validate();
  trust.validate();
}

TrajectorySolution plan_min_time(const PlanRequest& req) {
  req.validate();
  const auto started = Clock::now();
  const TrajectoryProblem problem = req.problem();

  const JointConfig q0 = solve_ik(req.chain, req.start.pose, req.home, req.limits, "start frame");
  JointConfig qH;
  try {
    qH = inverse_kinematics(req.chain, req.goal.pose, req.home, req.limits);
  } catch (const NoConvergence&) {
    qH = solve_ik(req.chain, req.goal.pose, q0, req.limits, "goal frame");
  }

  TrajectorySolution sol;
  auto attempt = [&](int h, const TrajectoryVariables& warm) {
    ++sol.horizons_tried;
    return sqp_solve(problem, h, req.t_step, &warm, req.trust, req.sqp);
  };
  auto record = [&](SQPOutcome&& out) {
    sol.history.push_back({out.variables.H, out.variables.H * req.t_step, out.inner_iterations});
    if (req.keep_all) sol.feasible.push_back(out.variables);
    sol.variables = std::move(out.variables);
  };
  auto failure_reason = [](const SQPOutcome& out) {
    return out.status == SQPStatus::IterationCapped ? StopReason::IterationCapped : StopReason::Infeasible;
  };
  auto out_of_time = [&] {
    return req.deadline && elapsed_ms(started) >= static_cast<double>(req.deadline->count());
  };

  SQPOutcome first = attempt(req.H_init, spline_init(q0, qH, req.H_init, req.t_step));
  if (first.status != SQPStatus::Converged) {
    throw NoTrajectory("no feasible trajectory at H = " + std::to_string(req.H_init) + " (" +
                       to_string(first.status) + ", last QP " + to_string(first.last_qp_status) + ")");
  }
  record(std::move(first));

  if (req.binary_search) {
    int infeasible = 1;
    sol.stop_reason = StopReason::MinimumHorizon;
    while (sol.variables.H - infeasible > 1) {
      if (out_of_time()) {
        sol.stop_reason = StopReason::Deadline;
        break;
      }
      const int mid = (infeasible + sol.variables.H) / 2;
      SQPOutcome out = attempt(mid, shrink_warm_start(sol.variables, mid));
      if (out.status == SQPStatus::Converged) {
        record(std::move(out));
      } else {
        infeasible = mid;
        sol.stop_reason = failure_reason(out);
      }
    }
    if (sol.variables.H == 2 && sol.stop_reason != StopReason::Deadline)
      sol.stop_reason = StopReason::MinimumHorizon;
    return sol;
  }

  sol.stop_reason = StopReason::MinimumHorizon;
  for (int h = req.H_init - 1; h >= 2; --h) {
    if (out_of_time()) {
      sol.stop_reason = StopReason::Deadline;
      break;
    }
    SQPOutcome out = attempt(h, shrink_warm_start(sol.variables, h));
    if (out.status != SQPStatus::Converged) {
      sol.stop_reason = failure_reason(out);
      break;
    }
    record(std::move(out));
  }
  return sol;
}

GraspSetResult plan_grasp_set(const std::vector<GraspFrame>& grasps, const PlanRequest& base, int jobs) {
  if (grasps.empty()) throw std::invalid_argument("plan_grasp_set needs at least one grasp");
  const int count = static_cast<int>(grasps.size());
  GraspSetResult result;
  result.per_grasp.resize(count);
  result.solutions.resize(count);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      const auto t0 = Clock::now();
      auto& rec = result.per_grasp[i];
      rec.index = i;
      PlanRequest req = base;
      req.start = grasps[i];
      try {
        TrajectorySolution s = plan_min_time(req);
        s.grasp_index = i;
        rec.ok = true;
        rec.duration_s = s.duration();
        rec.horizons_tried = s.horizons_tried;
        result.solutions[i] = std::move(s);
      } catch (const std::exception& e) {
        rec.reason = e.what();
      }
      rec.wall_ms = elapsed_ms(t0);
    }
  };
  const int threads = std::clamp(jobs, 1, count);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (int i = 0; i < count; ++i) {
    if (!result.per_grasp[i].ok) continue;
    if (result.best_index < 0 || result.per_grasp[i].duration_s < result.per_grasp[result.best_index].duration_s)
      result.best_index = i;
  }
  if (result.best_index < 0) throw NoTrajectory("no grasp produced a trajectory");
  result.solution = *result.solutions[result.best_index];
  return result;
}

// --- baseline ----------------------------------------------------------------

double trapezoid_min_time(double distance, double v_max, double a_max) {
  if (!(v_max > 0) || !(a_max > 0)) throw std::invalid_argument("limits must be positive");
  const double d = std::abs(distance);
  if (d <= v_max * v_max / a_max) return 2.0 * std::sqrt(d / a_max);
  return d / v_max + v_max / a_max;
}

BaselineResult baseline_plan(const GraspFrame& start, const GraspFrame& goal, double safe_z,
                             const MechanicalLimits& limits, const KinematicChain& chain,
                             double t_step, const JointConfig& home, double speed_fraction) {
  if (!(t_step > 0)) throw std::invalid_argument("t_step must be positive");
  if (!(speed_fraction > 0 && speed_fraction <= 1)) throw std::invalid_argument("speed fraction must be in (0, 1]");
  const int n = chain.joint_count();

  Pose above_start = start.pose;
  above_start.translation.z() = safe_z;
  Pose above_goal = goal.pose;
  above_goal.translation.z() = safe_z;

  const JointConfig q_pick = solve_ik(chain, start.pose, home, limits, "start frame");
  const JointConfig q_lift = solve_ik(chain, above_start, q_pick, limits, "lift point");
  const JointConfig q_over = solve_ik(chain, above_goal, q_lift, limits, "over-goal point");
  const JointConfig q_place = solve_ik(chain, goal.pose, q_over, limits, "goal frame");

  const Eigen::VectorXd v = limits.v_max * speed_fraction;
  const Eigen::VectorXd a = limits.a_max * speed_fraction;
  const std::vector<std::pair<JointConfig, JointConfig>> legs{
      {q_pick, q_lift}, {q_lift, q_over}, {q_over, q_place}};

  std::vector<int> steps;
  for (const auto& [from, to] : legs) {
    double T = 0.0;
    for (int j = 0; j < n; ++j) T = std::max(T, trapezoid_min_time(to[j] - from[j], v[j], a[j]));
    steps.push_back(steps_for(T, t_step));
  }

  BaselineResult res;
  res.segments = {steps[0] * t_step, steps[1] * t_step, steps[2] * t_step};
  const int H = std::max(2, steps[0] + steps[1] + steps[2]);
  TrajectoryVariables vars(H, n, t_step);
  int offset = 0;
  for (std::size_t s = 0; s < legs.size(); ++s) {
    const auto& [from, to] = legs[s];
    const double T = steps[s] * t_step;
    for (int k = 0; k <= steps[s] && offset + k <= H; ++k) {
      for (int j = 0; j < n; ++j) {
        const auto [dq, dv] = SyncProfile(to[j] - from[j], a[j], T).sample(k * t_step);
        vars.q(offset + k)[j] = from[j] + dq;
        vars.v(offset + k)[j] = dv;
      }
    }
    offset += steps[s];
  }
  for (int i = offset; i <= H; ++i) vars.q(i) = q_place;  // degenerate all-zero case
  vars.v(0).setZero();
  vars.v(H).setZero();
  res.solution.variables = std::move(vars);
  res.solution.history.push_back({H, H * t_step, 0});
  res.solution.stop_reason = StopReason::MinimumHorizon;
  return res;
}

double estimate_pick_time(const PipelinePhases& phases, double motion_to_grasp, double motion_to_place) {
  for (double x : {phases.imaging, phases.grasp_analysis, phases.gripper_close, phases.gripper_open,
                   motion_to_grasp, motion_to_place}) {
    if (!(x >= 0)) throw std::invalid_argument("pipeline times must be non-negative");
  }
  return phases.imaging + phases.grasp_analysis + motion_to_grasp + phases.gripper_close +
         motion_to_place + phases.gripper_open;
}

}  // namespace gomp
