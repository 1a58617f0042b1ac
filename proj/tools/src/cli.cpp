#include "gomp_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gomp/errors.hpp"
#include "gomp/scene.hpp"
#include "gomp/timeopt.hpp"
#include "gomp/trajectory_io.hpp"
#include "gomp/validate.hpp"
#include "gomp_cli/report.hpp"

namespace gomp::cli {
namespace {

namespace fs = std::filesystem;

struct Overrides {
  int h_init{0};
  double t_step{0.0};
  long deadline_ms{-1};
  int jobs{1};

  void apply(SceneConfig& s) const {
    if (h_init > 0) s.planner.H_init = h_init;
    if (t_step > 0) s.planner.t_step = t_step;
    s.validate();
  }
  void apply(PlanRequest& r) const {
    if (deadline_ms >= 0) r.deadline = std::chrono::milliseconds(deadline_ms);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text << '\n';
}

std::string scene_label(const fs::path& p) { return p.stem().string(); }

// --- plan ------------------------------------------------------------------

int cmd_plan(const std::string& scene_path, int grasp, const std::string& out_path, const std::string& csv_path,
             const Overrides& ov, std::ostream& out, std::ostream& err) {
  SceneConfig scene = load_scene(scene_path);
  ov.apply(scene);
  if (grasp < 0 || grasp >= static_cast<int>(scene.grasps.size()))
    throw ValidationError("grasp", "index " + std::to_string(grasp) + " out of range");
  PlanRequest req = scene.request(grasp);
  ov.apply(req);
  TrajectorySolution sol;
  try {
    sol = plan_min_time(req);
  } catch (const NoTrajectory& e) {
    err << "no trajectory: " << e.what() << '\n';
    return kNoTrajectory;
  }
  sol.grasp_index = grasp;
  save_trajectory(sol, out_path);
  if (!csv_path.empty()) write_velocity_csv(sol.variables, csv_path);
  out << "grasp " << grasp << ": H = " << sol.H() << ", duration " << sol.duration() << " s ("
      << sol.horizons_tried << " horizons, stopped: " << to_string(sol.stop_reason) << ")\n";
  return kOk;
}

// --- compare ---------------------------------------------------------------

int cmd_compare(const std::vector<std::string>& scene_paths, const std::string& out_path,
                const std::string& traj_dir, const Overrides& ov, std::ostream& out, std::ostream& err) {
  if (!traj_dir.empty()) fs::create_directories(traj_dir);
  RunReport report;
  for (const auto& path : scene_paths) {
    SceneConfig scene = load_scene(path);
    ov.apply(scene);
    const std::string label = scene_label(path);
    PlanRequest base = scene.request(0);
    ov.apply(base);
    std::vector<GraspFrame> frames;
    for (const auto& g : scene.grasps) frames.push_back(g.frame);

    GraspSetResult set;
    try {
      set = plan_grasp_set(frames, base, ov.jobs);
    } catch (const NoTrajectory&) {
      // Every grasp failed; rows below carry the reasons.
      set.per_grasp.clear();
    }
    for (int i = 0; i < static_cast<int>(scene.grasps.size()); ++i) {
      ReportRow row;
      row.scene = label;
      row.grasp_index = i;
      row.object_id = scene.grasps[i].object_id;
      if (!set.per_grasp.empty() && set.per_grasp[i].ok) {
        const auto& rec = set.per_grasp[i];
        row.status = "ok";
        row.duration_s = rec.duration_s;
        row.horizons_tried = rec.horizons_tried;
        row.wall_ms = rec.wall_ms;
        if (!traj_dir.empty())
          save_trajectory(*set.solutions[i], fs::path(traj_dir) / (label + "_g" + std::to_string(i) + ".json"));
      } else {
        row.status = set.per_grasp.empty() ? "no trajectory" : set.per_grasp[i].reason;
      }
      try {
        const BaselineResult b =
            baseline_plan(scene.grasps[i].frame, scene.place, scene.planner.safe_z, scene.limits, scene.chain,
                          scene.planner.t_step, scene.home, scene.planner.baseline_speed_fraction);
        row.has_baseline = true;
        row.baseline_s = b.solution.duration();
        if (row.ok()) row.speedup = row.baseline_s / row.duration_s;
      } catch (const NoTrajectory& e) {
        err << label << " grasp " << i << ": baseline failed: " << e.what() << '\n';
      }
      if (!row.ok()) err << label << " grasp " << i << ": " << row.status << '\n';
      report.rows.push_back(std::move(row));
    }
  }
  report.finalize();
  if (!out_path.empty()) write_text(out_path, report.to_json());
  report.print_table(out);
  return report.gomp.count > 0 ? kOk : kNoTrajectory;
}

// --- select ----------------------------------------------------------------

int cmd_select(const std::string& scene_path, const std::string& out_path, const std::string& traj_dir,
               const Overrides& ov, std::ostream& out, std::ostream& err) {
  SceneConfig scene = load_scene(scene_path);
  ov.apply(scene);
  if (!traj_dir.empty()) fs::create_directories(traj_dir);
  SelectReport report;
  report.scene = scene_label(scene_path);

  std::vector<std::string> order;
  std::map<std::string, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(scene.grasps.size()); ++i) {
    const auto& id = scene.grasps[i].object_id;
    if (!groups.count(id)) order.push_back(id);
    groups[id].push_back(i);
  }
  bool any = false;
  for (const auto& id : order) {
    const auto& idx = groups[id];
    std::vector<GraspFrame> frames;
    for (int i : idx) frames.push_back(scene.grasps[i].frame);
    PlanRequest base = scene.request(idx.front());
    ov.apply(base);

    ObjectSelection sel;
    sel.object_id = id;
    sel.grasp_indices = idx;
    try {
      GraspSetResult set = plan_grasp_set(frames, base, ov.jobs);
      std::vector<double> ok;
      for (const auto& rec : set.per_grasp) {
        sel.durations.push_back(rec.ok ? rec.duration_s : std::numeric_limits<double>::quiet_NaN());
        if (rec.ok) ok.push_back(rec.duration_s);
        else err << id << " grasp " << idx[rec.index] << ": " << rec.reason << '\n';
      }
      const Aggregate a = aggregate(ok);
      sel.min = a.min;
      sel.mean = a.mean;
      sel.max = a.max;
      sel.selected_index = idx[set.best_index];
      sel.selected_duration = set.solution.duration();
      if (!traj_dir.empty()) {
        TrajectorySolution s = set.solution;
        s.grasp_index = sel.selected_index;
        save_trajectory(s, fs::path(traj_dir) / (report.scene + "_" + id + ".json"));
      }
      any = true;
    } catch (const NoTrajectory& e) {
      err << id << ": " << e.what() << '\n';
      sel.durations.assign(idx.size(), std::numeric_limits<double>::quiet_NaN());
    }
    report.objects.push_back(std::move(sel));
  }
  if (!out_path.empty()) write_text(out_path, report.to_json());
  report.print_table(out);
  return any ? kOk : kNoTrajectory;
}

// --- validate --------------------------------------------------------------

int cmd_validate(const std::string& traj_path, const std::string& scene_path, int grasp, std::ostream& out,
                 std::ostream& err) {
  const SceneConfig scene = load_scene(scene_path);
  const TrajectorySolution sol = load_trajectory(traj_path);
  const int index = grasp >= 0 ? grasp : std::max(sol.grasp_index, 0);
  if (index >= static_cast<int>(scene.grasps.size()))
    throw ValidationError("grasp", "index " + std::to_string(index) + " out of range");
  if (sol.variables.n != scene.chain.joint_count())
    throw ValidationError("joints", "trajectory joint count does not match the scene");
  const ValidationReport rep = validate_trajectory(scene.request(index).problem(), sol.variables);
  for (const auto& v : rep.violations) err << "violation: " << v.describe() << '\n';
  if (!rep.ok()) {
    out << "FAIL: " << rep.violations.size() << " violated constraint(s)\n";
    return kValidationFailed;
  }
  out << "OK: H = " << sol.H() << ", duration " << sol.duration() << " s, all constraints satisfied\n";
  return kOk;
}

// --- scenegen --------------------------------------------------------------

struct GenOptions {
  std::uint64_t seed{1};
  int count{10};
  int grasps{3};
  int objects{1};
  std::string out_dir{"scenes"};
  std::string chain_ref;  ///< relative chain path written into each scene; inline when empty
  std::string prefix{"bin"};
};

void add_bin(DepthField& d, const Eigen::Vector2d& center, double half, double wall, double h) {
  for (int iy = 0; iy < d.height; ++iy) {
    for (int ix = 0; ix < d.width; ++ix) {
      const Eigen::Vector2d c = d.cell_center(ix, iy) - center;
      const double r = c.cwiseAbs().maxCoeff();
      if (r >= half && r < half + wall) d.cell(ix, iy) = std::max(d.cell(ix, iy), h);
    }
  }
}

SceneConfig generate_scene(std::mt19937_64& rng, const GenOptions& opt) {
  auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double pi = std::numbers::pi;
  SceneConfig s;
  s.chain = KinematicChain::ur5();
  s.limits = MechanicalLimits::uniform(6, 2 * pi, pi, 10.0);  // example values, not UR5 specifications
  s.home = (Eigen::VectorXd(6) << pi, -pi / 2, pi / 2, -pi / 2, -pi / 2, 0).finished();

  DepthField d = DepthField::flat({0.10, -0.66}, 0.02, 35, 66, 0.0);
  const Eigen::Vector2d pick(0.40 + U(-0.04, 0.04), -0.30 + U(-0.04, 0.04));
  const Eigen::Vector2d place(0.40 + U(-0.04, 0.04), 0.30 + U(-0.04, 0.04));
  const double half = 0.14;
  add_bin(d, pick, half, 0.02, U(0.10, 0.13));
  add_bin(d, place, half, 0.02, U(0.08, 0.12));
  s.depth = d;

  for (int i = 0; i < opt.grasps; ++i) {
    GraspCandidate g;
    const Eigen::Vector3d p(pick.x() + U(-0.09, 0.09), pick.y() + U(-0.09, 0.09), U(0.03, 0.07));
    g.frame = GraspFrame::top_down(p, U(-pi / 2, pi / 2)).with_rotation_range(pi / 4);
    g.score = std::round(U(0.5, 1.0) * 1000) / 1000;
    g.object_id = "object" + std::to_string(i % std::max(opt.objects, 1));
    // Overhead camera: 1 px per 2 mm, image origin at the pick-bin corner.
    g.image_xy = Eigen::Vector2d(std::round((p.x() - pick.x() + half) * 500), std::round((p.y() - pick.y() + half) * 500));
    s.grasps.push_back(std::move(g));
  }
  s.place = GraspFrame::top_down({place.x(), place.y(), 0.10}, 0.0).with_rotation_range(pi / 4);
  s.planner.H_init = 90;
  s.planner.i_max = 50;
  s.planner.t_step = 0.016;
  s.planner.safe_z = 0.35;
  s.validate();
  return s;
}

int cmd_scenegen(const GenOptions& opt, std::ostream& out) {
  if (opt.count < 1 || opt.grasps < 1) throw ValidationError("count", "must be at least 1");
  std::mt19937_64 rng(opt.seed);
  fs::create_directories(opt.out_dir);
  for (int k = 0; k < opt.count; ++k) {
    const SceneConfig s = generate_scene(rng, opt);
    nlohmann::json j = nlohmann::json::parse(scene_to_json(s));
    if (!opt.chain_ref.empty()) j["robot"]["chain"] = opt.chain_ref;
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%02d.json", opt.prefix.c_str(), k);
    const fs::path path = fs::path(opt.out_dir) / name;
    write_text(path, j.dump(2));
    load_scene(path);  // everything written must load back
    out << path.string() << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grasp-optimized time-minimal motion planning"};
  app.require_subcommand(1);
  Overrides ov;
  std::uint64_t seed = 1;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--jobs", ov.jobs, "Concurrent grasp plans")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--deadline-ms", ov.deadline_ms,
                    "Wall-clock budget per plan, checked between horizons (-1 = none)")->capture_default_str();
    sub->add_option("--h-init", ov.h_init, "Initial horizon (overrides the scene; 0 = scene value)")->capture_default_str();
    sub->add_option("--t-step", ov.t_step, "Time step in s (overrides the scene; 0 = scene value)")->capture_default_str();
    sub->add_option("--seed", seed, "Seed for randomized steps (planning itself is deterministic)")->capture_default_str();
  };

  std::string scene, out_path, csv, traj_dir, trajectory;
  std::vector<std::string> scenes;
  int grasp = 0;
  int validate_grasp = -1;

  auto* plan = app.add_subcommand("plan", "Plan a minimum-time trajectory from one grasp to the place frame");
  plan->add_option("--scene", scene, "Scene file")->required();
  plan->add_option("--grasp", grasp, "Grasp index")->capture_default_str();
  plan->add_option("--out", out_path, "Trajectory JSON output")->required();
  plan->add_option("--csv", csv, "Optional velocity/acceleration CSV (one row per interval)");
  add_overrides(plan);

  auto* compare = app.add_subcommand("compare", "GOMP vs. the 3-step baseline for every grasp of one or more scenes");
  compare->add_option("--scene", scenes, "Scene file (repeatable)")->required();
  compare->add_option("--out", out_path, "Report JSON output");
  compare->add_option("--traj-dir", traj_dir, "Directory for the planned trajectories");
  add_overrides(compare);

  auto* select = app.add_subcommand("select", "Pick the fastest grasp per object");
  select->add_option("--scene", scene, "Scene file")->required();
  select->add_option("--out", out_path, "Report JSON output");
  select->add_option("--traj-dir", traj_dir, "Directory for the selected trajectories");
  add_overrides(select);

  auto* validate = app.add_subcommand("validate", "Re-check every constraint of a trajectory");
  validate->add_option("--trajectory", trajectory, "Trajectory JSON")->required();
  validate->add_option("--scene", scene, "Scene file")->required();
  validate->add_option("--grasp", validate_grasp, "Grasp index (default: the one recorded in the trajectory)");

  GenOptions gen;
  auto* scenegen = app.add_subcommand("scenegen", "Generate randomized bin-picking scenes");
  scenegen->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  scenegen->add_option("--count", gen.count, "Number of scenes")->capture_default_str();
  scenegen->add_option("--grasps", gen.grasps, "Grasps per scene")->capture_default_str();
  scenegen->add_option("--objects", gen.objects, "Distinct object ids per scene")->capture_default_str();
  scenegen->add_option("--out", gen.out_dir, "Output directory")->capture_default_str();
  scenegen->add_option("--chain-ref", gen.chain_ref, "Chain file path to reference instead of inlining");
  scenegen->add_option("--prefix", gen.prefix, "File name prefix")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kInputError;
  }

  try {
    if (*plan) return cmd_plan(scene, grasp, out_path, csv, ov, out, err);
    if (*compare) return cmd_compare(scenes, out_path, traj_dir, ov, out, err);
    if (*select) return cmd_select(scene, out_path, traj_dir, ov, out, err);
    if (*validate) return cmd_validate(trajectory, scene, validate_grasp, out, err);
    if (*scenegen) return cmd_scenegen(gen, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kInputError;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInputError;
  } catch (const NoTrajectory& e) {
    err << "no trajectory: " << e.what() << '\n';
    return kNoTrajectory;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace gomp::cli
