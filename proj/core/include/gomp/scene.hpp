#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gomp/depth_field.hpp"
#include "gomp/grasp_frame.hpp"
#include "gomp/kinematics.hpp"
#include "gomp/limits.hpp"
#include "gomp/timeopt.hpp"
#include "gomp/trajopt.hpp"

namespace gomp {

struct GraspCandidate {
  GraspFrame frame;
  double score{1.0};
  std::string object_id;
  std::optional<Eigen::Vector2d> image_xy;  ///< pixels

  bool operator==(const GraspCandidate&) const = default;
};

struct PlannerParams {
  int H_init{60};
  double t_step{0.008};
  int i_max{20};
  double constraint_tol{1e-4};
  double linearization_tol{1e-4};
  double qp_eps{1e-6};
  int qp_max_iter{4000};
  TrustRegionState trust;  ///< obstacle_margin is the clearance margin
  double safe_z{0.3};
  double baseline_speed_fraction{0.25};
  bool binary_search{false};

  SQPSettings sqp_settings() const;
  bool operator==(const PlannerParams& o) const;
};

struct SceneConfig {
  KinematicChain chain;
  JointConfig home;
  std::vector<CheckPoint> check_points;
  MechanicalLimits limits;
  DepthField depth;
  std::vector<GraspCandidate> grasps;
  GraspFrame place;
  PlannerParams planner;

  void validate() const;
  /// Request for planning from grasp `index` to the place frame.
  PlanRequest request(int index) const;

  bool operator==(const SceneConfig& o) const;
};

/// Kinematic chain file: {"joint_count": n, "links": [{a, alpha, d, theta_offset}, ...]}.
KinematicChain load_chain(const std::filesystem::path& path);
void save_chain(const KinematicChain& chain, const std::filesystem::path& path);

/// Parses and validates a scene file. Relative sidecar paths (chain file,
/// depth heights) resolve against the scene file's directory.
/// Throws ParseError on malformed input and ValidationError naming the field.
SceneConfig load_scene(const std::filesystem::path& path);
SceneConfig parse_scene(const std::string& json_text,
                        const std::filesystem::path& base_dir = std::filesystem::current_path());

/// Self-contained canonical form (chain, heights and rotations inline).
std::string scene_to_json(const SceneConfig& scene);
void save_scene(const SceneConfig& scene, const std::filesystem::path& path);

/// Little-endian float32 row-major height grid.
std::vector<double> read_heights_file(const std::filesystem::path& path, std::size_t count);
void write_heights_file(const std::vector<double>& heights, const std::filesystem::path& path);

enum class DistanceSpace { ImagePixels, WorkspaceMeters };

/// Greedy minimum-distance filter in descending score order (ties by input
/// index); a grasp is kept iff it is at least `d_min` from every kept grasp.
std::vector<GraspCandidate> diversity_filter(const std::vector<GraspCandidate>& grasps, double d_min,
                                             DistanceSpace space);

}  // namespace gomp
