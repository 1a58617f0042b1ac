// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gomp/errors.hpp"
#include "gomp/kinematics.hpp"
#include "gomp/qp.hpp"
#include "gomp/scene.hpp"
#include "gomp/timeopt.hpp"
#include "gomp/trajectory_io.hpp"
#include "gomp/validate.hpp"
#include "gomp_cli/cli.hpp"
#include "gomp_cli/report.hpp"
#include "oracles.hpp"

namespace {

using namespace gomp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass{false};
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

fs::path scene_path(const std::string& name) { return oracle::data_dir() / "scenes" / name; }

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != cli::kOk) std::cerr << "  [gomp " << args.front() << " exit " << code << "] " << e.str();
  return code;
}

std::string read(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// 1. Pick-cycle arithmetic.
Outcome pick_time() {
  const PipelinePhases phases{1.200, 0.529, 0.280, 0.280};
  const double slow = estimate_pick_time(phases, 5.042, 5.042);
  const double fast = estimate_pick_time(phases, 0.544, 0.544);
  const double ratio = slow / fast;
  const bool ok = std::abs(slow - 12.373) < 1e-9 && std::abs(fast - 3.377) < 1e-9 && std::abs(ratio - 3.66) < 5e-3;
  return {ok, fmt("baseline %.3f s, optimized %.3f s, ratio %.3f", slow, fast, ratio)};
}

// 2. Single-joint scene reproduces H = 27 at t = 0.008 s.
Outcome single_joint_horizon() {
  const SceneConfig s = load_scene(scene_path("single_joint_h27.json"));
  const TrajectorySolution sol = plan_min_time(s.request(0));
  const bool ok = sol.H() == 27 && std::abs(sol.duration() - 0.216) < 1e-12 &&
                  sol.duration() == sol.H() * s.planner.t_step &&
                  validate_trajectory(s.request(0).problem(), sol.variables).ok();
  return {ok, fmt("H = %d, duration %.6f s (expected 27, 0.216 s)", sol.H(), sol.duration())};
}

// 3. Randomized single-joint moves land within one step of the closed form.
// Also reports how often the result is the optimum of the discrete model.
Outcome single_joint_closed_form() {
  std::mt19937_64 rng(2024);
  auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  int pass = 0, total = 0, discrete_opt = 0;
  double worst = 0.0;
  std::string failures;
  for (int k = 0; k < 24; ++k) {
    const double dq = U(0.2, 1.6), v = U(1.0, 4.0), a = U(5.0, 20.0), t = U(0.01, 0.02);
    const double closed = oracle::closed_form_min_time(dq, v, a);
    const int H_init = static_cast<int>(std::ceil(1.3 * closed / t)) + 3;
    const SceneConfig s = oracle::one_joint_scene(dq, v, a, t, H_init, 0.5, 1e-4);
    ++total;
    try {
      const TrajectorySolution sol = plan_min_time(s.request(0));
      const double err = sol.duration() - closed;
      const int h_opt = oracle::discrete_min_horizon(dq, t, v, a);
      if (sol.H() == h_opt) ++discrete_opt;
      worst = std::max(worst, std::abs(err) / t);
      const ValidationReport rep = validate_trajectory(s.request(0).problem(), sol.variables);
      if (std::abs(err) <= t && rep.ok()) ++pass;
      else failures += fmt(" [dq %.3f v %.3f a %.3f t %.4f: %.4f s vs %.4f s = %+.3f steps; H %d, discrete optimum %d%s]",
                           dq, v, a, t, sol.duration(), closed, err / t, sol.H(), h_opt,
                           rep.ok() ? "" : (", " + rep.violations.front().describe()).c_str());
    } catch (const std::exception& e) {
      failures += fmt(" [dq %.3f: %s]", dq, e.what());
    }
  }
  return {pass == total, fmt("%d/%d within one step, worst |T - T*| = %.3f steps; %d/%d at the discrete-model optimum",
                             pass, total, worst, discrete_opt, total) + failures};
}

// 4. Optimized motion beats the three-segment baseline on every grasp.
const fs::path kCompareDir = oracle::scratch_dir("acceptance/compare");

Outcome compare_to_baseline() {
  std::vector<std::string> args{"compare"};
  for (int i = 0; i < 10; ++i) {
    args.push_back("--scene");
    args.push_back(scene_path(fmt("bin_%02d.json", i)).string());
  }
  args.insert(args.end(), {"--out", (kCompareDir / "report.json").string(), "--traj-dir",
                           (kCompareDir / "traj").string(), "--jobs", "3"});
  std::string table;
  if (cli(args, &table) != cli::kOk) return {false, "compare failed"};
  const cli::RunReport rep = cli::RunReport::from_json(read(kCompareDir / "report.json"));
  int ok = 0;
  for (const auto& r : rep.rows)
    if (r.ok() && r.has_baseline && r.duration_s < r.baseline_s) ++ok;
  std::cout << table;
  const bool pass = ok == static_cast<int>(rep.rows.size()) && !rep.rows.empty();
  return {pass, fmt("%d/%zu grasps faster; optimized %.3f +/- %.3f s [%.3f, %.3f], baseline %.3f +/- %.3f s, "
                    "speedup %.2fx (per-row %.2fx..%.2fx)",
                    ok, rep.rows.size(), rep.gomp.mean, rep.gomp.stdev, rep.gomp.min, rep.gomp.max,
                    rep.baseline.mean, rep.baseline.stdev, rep.speedup_of_means, rep.speedup.min, rep.speedup.max)};
}

// 5. Every emitted trajectory passes the independent validator.
std::vector<std::pair<fs::path, fs::path>> g_emitted;  // trajectory, scene

Outcome validate_emitted() {
  for (int i = 0; i < 10; ++i) {
    const std::string label = fmt("bin_%02d", i);
    for (int g = 0;; ++g) {
      const fs::path t = kCompareDir / "traj" / fmt("%s_g%d.json", label.c_str(), g);
      if (!fs::exists(t)) break;
      g_emitted.emplace_back(t, scene_path(label + ".json"));
    }
  }
  int pass = 0;
  std::string failures;
  for (const auto& [traj, scene] : g_emitted) {
    if (cli({"validate", "--trajectory", traj.string(), "--scene", scene.string()}) == cli::kOk) ++pass;
    else failures += " " + traj.filename().string();
  }
  return {pass == static_cast<int>(g_emitted.size()) && pass >= 30,
          fmt("%d/%zu trajectories valid", pass, g_emitted.size()) + failures};
}

// 6. Rotation freedom about a skewed grasp axis shortens the motion.
Outcome free_axis_benefit() {
  const SceneConfig s = load_scene(scene_path("free_axis_skew.json"));
  const TrajectorySolution free = plan_min_time(s.request(0));
  SceneConfig pinned = s;
  for (GraspFrame* f : {&pinned.grasps[0].frame, &pinned.place}) {
    f->theta_lo = 0.0;
    f->theta_hi = 0.0;
  }
  const TrajectorySolution fixed = plan_min_time(pinned.request(0));
  const double t = s.planner.t_step;
  const bool valid = validate_trajectory(s.request(0).problem(), free.variables).ok() &&
                     validate_trajectory(pinned.request(0).problem(), fixed.variables).ok();
  const bool ok = valid && free.duration() <= fixed.duration() && fixed.duration() - free.duration() >= t - 1e-12;
  return {ok, fmt("free rotation %.3f s (H = %d) vs pinned %.3f s (H = %d)", free.duration(), free.H(),
                  fixed.duration(), fixed.H())};
}

// 7. QP solver agrees with exhaustive enumeration and certifies infeasibility.
QuadraticProgram dense_qp(const Eigen::MatrixXd& P, const Eigen::VectorXd& p, const Eigen::MatrixXd& A,
                          const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
  return {P.sparseView(), p, A.sparseView(), l, u};
}

Outcome qp_against_enumeration() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  int solved = 0;
  for (int k = 0; k < 20; ++k) {
    const int d = 2 + k % 5;
    const Eigen::MatrixXd M = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return N(rng); });
    const Eigen::MatrixXd P = M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd p = Eigen::VectorXd::NullaryExpr(d, [&] { return 3.0 * N(rng); });
    const Eigen::VectorXd x0 = Eigen::VectorXd::NullaryExpr(d, [&] { return 0.5 * N(rng); });
    const int m = 8;
    Eigen::MatrixXd A(m, d);
    Eigen::VectorXd l(m), u(m);
    for (int i = 0; i < m; ++i) {
      A.row(i) = Eigen::RowVectorXd::NullaryExpr(d, [&] { return N(rng); });
      const double c = A.row(i).dot(x0), kind = U(rng);
      l[i] = kind < 0.35 ? -kInf : c - 0.3 * U(rng);
      u[i] = kind > 0.65 ? kInf : c + 0.3 * U(rng);
    }
    if (k % 4 == 0) l[0] = u[0] = A.row(0).dot(x0);
    const oracle::EnumeratedQP ref = oracle::enumerate_qp(P, p, A, l, u);
    const QPResult r = solve(dense_qp(P, p, A, l, u), std::nullopt, 1e-8);
    if (!ref.feasible || r.status != QPStatus::Solved) continue;
    ++solved;
    worst = std::max(worst, (r.x - ref.x).cwiseAbs().maxCoeff());
  }
  // Contradictory bounds, and inconsistent equalities.
  int certified = 0;
  auto certify = [&](const QuadraticProgram& qp) {
    const QPResult r = solve(qp, std::nullopt);
    if (r.status != QPStatus::PrimalInfeasible) return;
    const Eigen::VectorXd& y = r.certificate;
    double support = 0.0;  // skips 0 * inf terms
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] > 0) support += qp.upper[i] * y[i];
      if (y[i] < 0) support += qp.lower[i] * y[i];
    }
    if ((qp.A.transpose() * y).cwiseAbs().maxCoeff() <= 1e-6 && support < 0) ++certified;
  };
  certify(dense_qp(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(2, 1),
                   Eigen::Vector2d(1.0, -kInf), Eigen::Vector2d(kInf, -1.0)));
  Eigen::MatrixXd A2(2, 2);
  A2 << 1, 1, 2, 2;
  certify(dense_qp(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), A2, Eigen::Vector2d(1, 3),
                   Eigen::Vector2d(1, 3)));
  const bool ok = solved == 20 && worst <= 1e-6 && certified == 2;
  return {ok, fmt("%d/20 solved, max |x - x_ref| = %.1e; %d/2 infeasibility certificates", solved, worst, certified)};
}

// 8. Kinematics: analytic Jacobian vs differences, inverse kinematics round trips.
Outcome kinematics() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-kPi, kPi);
  std::normal_distribution<double> N(0.0, 1.0);
  const KinematicChain ur5 = KinematicChain::ur5();
  const MechanicalLimits lim = MechanicalLimits::uniform(6, 2 * kPi, kPi, 10.0);
  double jac = 0.0, ik = 0.0;
  int ik_ok = 0;
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd q(6);
    for (int j = 0; j < 6; ++j) q[j] = U(rng);
    jac = std::max(jac, (jacobian(ur5, q) - oracle::fd_jacobian(ur5, q)).cwiseAbs().maxCoeff());
    Eigen::VectorXd dq(6);
    for (int j = 0; j < 6; ++j) dq[j] = N(rng);
    dq *= 0.05 / dq.norm();
    const Pose target = forward_kinematics(ur5, q + dq);
    try {
      const Eigen::VectorXd s = inverse_kinematics(ur5, target, q, lim);
      const double e = pose_error(target, forward_kinematics(ur5, s)).norm();
      ik = std::max(ik, e);
      if (e <= 1e-6) ++ik_ok;
    } catch (const NoConvergence&) {
    }
  }
  return {jac <= 1e-5 && ik_ok == 100,
          fmt("max Jacobian error %.1e over 100 configurations; %d/100 IK targets, max pose error %.1e", jac, ik_ok, ik)};
}

// 9. An anytime deadline returns the corresponding trajectory of the full run.
Outcome deadline() {
  const fs::path dir = oracle::scratch_dir("acceptance/deadline");
  const std::string scene = scene_path("bin_00.json").string();
  const SceneConfig s = load_scene(scene);
  PlanRequest r = s.request(0);
  r.keep_all = true;
  const auto t0 = Clock::now();
  const TrajectorySolution full = plan_min_time(r);
  const double full_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  const long budget = std::max(1L, static_cast<long>(0.4 * full_ms));
  const fs::path out = dir / "deadline.json";
  if (cli({"plan", "--scene", scene, "--grasp", "0", "--deadline-ms", std::to_string(budget), "--out", out.string()}) !=
      cli::kOk)
    return {false, "plan with deadline failed"};
  const TrajectorySolution cut = load_trajectory(out);
  const std::size_t k = cut.history.size();
  if (k == 0 || k > full.feasible.size()) return {false, "unexpected history length"};
  const TrajectoryVariables& expect = full.feasible[k - 1];
  const bool same = cut.variables.H == expect.H && cut.variables.x.size() == expect.x.size() &&
                    cut.variables.x == expect.x;
  const bool valid = cli({"validate", "--trajectory", out.string(), "--scene", scene}) == cli::kOk;
  g_emitted.emplace_back(out, scene);
  return {same && valid && cut.duration() >= full.duration(),
          fmt("full run %.0f ms to H = %d; %ld ms budget stopped at H = %d (%s) after %zu horizons; %s, %s", full_ms,
              full.H(), budget, cut.H(), to_string(cut.stop_reason), k, same ? "bit-identical" : "DIFFERS",
              valid ? "valid" : "INVALID")};
}

// 10. Per-object grasp selection picks the fastest grasp.
Outcome selection() {
  const fs::path dir = oracle::scratch_dir("acceptance/select");
  const std::string scene = scene_path("select_00.json").string();
  std::string table;
  if (cli({"select", "--scene", scene, "--out", (dir / "select.json").string(), "--traj-dir",
           (dir / "traj").string(), "--jobs", "3"},
          &table) != cli::kOk)
    return {false, "select failed"};
  std::cout << table;
  const cli::SelectReport rep = cli::SelectReport::from_json(read(dir / "select.json"));
  bool ok = !rep.objects.empty();
  std::string detail;
  for (const auto& o : rep.objects) {
    const bool order = o.min <= o.mean && o.mean <= o.max;
    const bool best = o.selected_duration == o.min && o.selected_index >= 0;
    const fs::path traj = dir / "traj" / (rep.scene + "_" + o.object_id + ".json");
    const bool valid =
        cli({"validate", "--trajectory", traj.string(), "--scene", scene}) == cli::kOk;
    ok = ok && order && best && valid;
    detail += fmt("%s%s: %.3f/%.3f/%.3f s, picked grasp %d%s", detail.empty() ? "" : "; ", o.object_id.c_str(), o.min,
                  o.mean, o.max, o.selected_index, order && best && valid ? "" : " (FAIL)");
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number; all run by default.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"pick-cycle time estimate", pick_time},
      {"single-joint horizon", single_joint_horizon},
      {"single-joint closed form", single_joint_closed_form},
      {"faster than baseline", compare_to_baseline},
      {"emitted trajectories validate", validate_emitted},
      {"free rotation axis helps", free_axis_benefit},
      {"QP vs enumeration", qp_against_enumeration},
      {"kinematics", kinematics},
      {"anytime deadline", deadline},
      {"grasp selection", selection},
  };
  int failed = 0;
  int ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i + 1)) == only.end()) continue;
    ++ran;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): "
              << o.detail << fmt(" [%.1f s]", s) << std::endl;
  }
  std::cout << ran - failed << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
