#include "gomp/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gomp/errors.hpp"

namespace gomp {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& path, const std::string& msg) { throw ValidationError(path, msg); }

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) bad(path + "." + key, "missing required field");
  return *it;
}

const json* optional_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

// Numbers; null and the strings "nan"/"inf"/"-inf" map to non-finite values
// so that bad cells reach validation instead of failing the parse.
double number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  bad(path, "expected a number");
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<int>();
}

Eigen::VectorXd vector(const json& j, const std::string& path, Eigen::Index expected = -1) {
  if (!j.is_array()) bad(path, "expected an array");
  if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected)
    bad(path, "expected " + std::to_string(expected) + " values, got " + std::to_string(j.size()));
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

// Per-joint limit: an array of n values or one value for every joint.
Eigen::VectorXd per_joint(const json& j, const std::string& path, int n) {
  if (j.is_array()) return vector(j, path, n);
  return Eigen::VectorXd::Constant(n, number(j, path));
}

json to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

KinematicChain chain_from_json(const json& j, const std::string& path) {
  const json& links = require(j, "links", path);
  if (!links.is_array() || links.empty()) bad(path + ".links", "expected a non-empty array");
  if (const json* jc = optional_field(j, "joint_count")) {
    if (integer(*jc, path + ".joint_count") != static_cast<int>(links.size()))
      bad(path + ".joint_count", "does not match the number of links (" + std::to_string(links.size()) + ")");
  }
  std::vector<DHLink> out;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string p = path + ".links[" + std::to_string(i) + "]";
    DHLink l;
    l.a = number(require(links[i], "a", p), p + ".a");
    l.alpha = number(require(links[i], "alpha", p), p + ".alpha");
    l.d = number(require(links[i], "d", p), p + ".d");
    if (const json* off = optional_field(links[i], "theta_offset")) l.theta_offset = number(*off, p + ".theta_offset");
    for (double x : {l.a, l.alpha, l.d, l.theta_offset})
      if (!std::isfinite(x)) bad(p, "DH parameters must be finite");
    out.push_back(l);
  }
  return KinematicChain(std::move(out));
}

json chain_to_json(const KinematicChain& chain) {
  json links = json::array();
  for (const auto& l : chain.links())
    links.push_back({{"a", l.a}, {"alpha", l.alpha}, {"d", l.d}, {"theta_offset", l.theta_offset}});
  return {{"joint_count", chain.joint_count()}, {"links", links}};
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

FreeRotation freedom_from_string(const std::string& s, const std::string& path) {
  if (s == "none") return FreeRotation::None;
  if (s == "axis") return FreeRotation::Axis;
  if (s == "any") return FreeRotation::Any;
  bad(path, "expected one of none, axis, any");
}

GraspFrame frame_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  const Eigen::Vector3d position = vector(require(j, "position", path), path + ".position", 3);
  GraspFrame g;
  if (const json* yaw = optional_field(j, "top_down_angle")) {
    g = GraspFrame::top_down(position, number(*yaw, path + ".top_down_angle"));
  } else if (const json* rot = optional_field(j, "rotation")) {
    const Eigen::VectorXd r = vector(*rot, path + ".rotation", 9);
    g.pose.rotation = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(r.data());
    g.pose.translation = position;
    if (!g.pose.is_valid()) bad(path + ".rotation", "not a proper orthonormal matrix");
  } else {
    const Eigen::VectorXd wxyz = vector(require(j, "quaternion", path), path + ".quaternion", 4);
    Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
    if (!wxyz.allFinite() || std::abs(q.norm() - 1.0) > 1e-6) bad(path + ".quaternion", "must be a unit quaternion");
    g.pose = Pose::from_quaternion(q.normalized(), position);
  }
  if (const json* axis = optional_field(j, "free_axis")) g.free_axis = vector(*axis, path + ".free_axis", 3);
  const json* range = optional_field(j, "rotation_range");
  if (range != nullptr) {
    if (range->is_array()) {
      const Eigen::VectorXd r = vector(*range, path + ".rotation_range", 2);
      g.theta_lo = r[0];
      g.theta_hi = r[1];
    } else {
      const double half = number(*range, path + ".rotation_range");
      g.theta_lo = -half;
      g.theta_hi = half;
    }
    g.freedom = FreeRotation::Axis;
  }
  if (const json* f = optional_field(j, "freedom")) {
    if (!f->is_string()) bad(path + ".freedom", "expected a string");
    g.freedom = freedom_from_string(f->get<std::string>(), path + ".freedom");
  }
  if (const json* eps = optional_field(j, "epsilon")) g.epsilon = vector(*eps, path + ".epsilon", 6);
  g.validate(path);
  return g;
}

json frame_to_json(const GraspFrame& g) {
  const Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r = g.pose.rotation;
  return {{"position", to_json(g.pose.translation)},
          {"rotation", std::vector<double>(r.data(), r.data() + 9)},
          {"freedom", to_string(g.freedom)},
          {"free_axis", to_json(g.free_axis)},
          {"rotation_range", {g.theta_lo, g.theta_hi}},
          {"epsilon", to_json(g.epsilon)}};
}

DepthField depth_from_json(const json& j, const fs::path& base) {
  const std::string path = "depth";
  DepthField d;
  d.origin = vector(require(j, "origin", path), path + ".origin", 2);
  d.resolution = number(require(j, "resolution", path), path + ".resolution");
  d.width = integer(require(j, "width", path), path + ".width");
  d.height = integer(require(j, "height", path), path + ".height");
  if (d.width < 1) bad(path + ".width", "must be at least 1");
  if (d.height < 1) bad(path + ".height", "must be at least 1");
  if (const json* ext = optional_field(j, "exterior_height")) d.exterior_height = number(*ext, path + ".exterior_height");
  if (const json* dil = optional_field(j, "dilation_radius")) d.dilation_radius = number(*dil, path + ".dilation_radius");
  const std::size_t cells = static_cast<std::size_t>(d.width) * d.height;
  if (const json* file = optional_field(j, "heights_file")) {
    const std::string p = path + ".heights_file";
    const json& fp = require(*file, "path", p);
    if (!fp.is_string()) bad(p + ".path", "expected a string");
    const int count = integer(require(*file, "count", p), p + ".count");
    if (count < 0 || static_cast<std::size_t>(count) != cells)
      bad(p + ".count", "must equal width*height = " + std::to_string(cells));
    fs::path hp = fp.get<std::string>();
    if (hp.is_relative()) hp = base / hp;
    d.heights = read_heights_file(hp, cells);
  } else {
    const json& h = require(j, "heights", path);
    if (h.is_number()) {
      d.heights.assign(cells, h.get<double>());
    } else {
      const Eigen::VectorXd v = vector(h, path + ".heights");
      d.heights.assign(v.data(), v.data() + v.size());
    }
  }
  d.validate(path.c_str());
  return d;
}

}  // namespace

SQPSettings PlannerParams::sqp_settings() const {
  SQPSettings s;
  s.i_max = i_max;
  s.constraint_tol = constraint_tol;
  s.linearization_tol = linearization_tol;
  s.qp.eps_abs = qp_eps;
  s.qp.eps_rel = qp_eps;
  s.qp.max_iter = qp_max_iter;
  return s;
}

bool PlannerParams::operator==(const PlannerParams& o) const {
  const auto& a = trust;
  const auto& b = o.trust;
  return H_init == o.H_init && t_step == o.t_step && i_max == o.i_max &&
         constraint_tol == o.constraint_tol && linearization_tol == o.linearization_tol &&
         qp_eps == o.qp_eps && qp_max_iter == o.qp_max_iter && safe_z == o.safe_z &&
         baseline_speed_fraction == o.baseline_speed_fraction && binary_search == o.binary_search &&
         a.radius_q0 == b.radius_q0 && a.radius_qH == b.radius_qH &&
         a.obstacle_margin == b.obstacle_margin && a.shrink_factor == b.shrink_factor &&
         a.grow_factor == b.grow_factor && a.min_radius == b.min_radius && a.max_radius == b.max_radius;
}

void SceneConfig::validate() const {
  const int n = chain.joint_count();
  if (n < 1) bad("robot.chain", "needs at least one joint");
  limits.validate("limits");
  if (limits.joint_count() != n) bad("limits.q_min", "joint count does not match the chain");
  if (home.size() != n) bad("robot.home", "expected " + std::to_string(n) + " values");
  if (!home.allFinite() || !limits.contains(home)) bad("robot.home", "must lie within the joint limits");
  for (std::size_t i = 0; i < check_points.size(); ++i) {
    const auto& cp = check_points[i];
    const std::string p = "robot.check_points[" + std::to_string(i) + "]";
    if (cp.link < 0 || cp.link >= n) bad(p + ".link", "must be a joint index");
    if (!cp.offset.allFinite()) bad(p + ".offset", "must be finite");
  }
  depth.validate("depth");
  if (grasps.empty()) bad("grasps", "at least one grasp is required");
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    const std::string p = "grasps[" + std::to_string(i) + "]";
    if (!(grasps[i].score >= 0.0 && grasps[i].score <= 1.0)) bad(p + ".score", "must lie in [0, 1]");
    if (grasps[i].image_xy && !grasps[i].image_xy->allFinite()) bad(p + ".image_xy", "must be finite");
    grasps[i].frame.validate(p + ".frame");
  }
  place.validate("place");
  if (planner.H_init < 2) bad("planner.H_init", "must be at least 2");
  if (!(planner.t_step > 0) || !std::isfinite(planner.t_step)) bad("planner.t_step", "must be positive");
  if (planner.i_max < 1) bad("planner.i_max", "must be at least 1");
  if (!(planner.constraint_tol > 0)) bad("planner.tolerances.constraint", "must be positive");
  if (!(planner.linearization_tol > 0)) bad("planner.tolerances.linearization", "must be positive");
  if (!(planner.qp_eps > 0)) bad("planner.tolerances.qp_eps", "must be positive");
  if (planner.qp_max_iter < 1) bad("planner.tolerances.qp_max_iter", "must be at least 1");
  if (!(planner.trust.obstacle_margin >= 0)) bad("planner.clearance_margin", "must be non-negative");
  try {
    planner.trust.validate();
  } catch (const ValidationError& e) {
    bad("planner.trust_region", e.what());
  }
  if (!std::isfinite(planner.safe_z)) bad("planner.safe_z", "must be finite");
  if (!(planner.baseline_speed_fraction > 0 && planner.baseline_speed_fraction <= 1))
    bad("planner.baseline_speed_fraction", "must lie in (0, 1]");
}

PlanRequest SceneConfig::request(int index) const {
  if (index < 0 || index >= static_cast<int>(grasps.size()))
    throw std::out_of_range("grasp index " + std::to_string(index) + " out of range");
  PlanRequest r;
  r.start = grasps[index].frame;
  r.goal = place;
  r.H_init = planner.H_init;
  r.t_step = planner.t_step;
  r.limits = limits;
  r.chain = chain;
  r.depth = depth;
  r.home = home;
  r.check_points = check_points;
  r.trust = planner.trust;
  r.sqp = planner.sqp_settings();
  r.binary_search = planner.binary_search;
  return r;
}

bool SceneConfig::operator==(const SceneConfig& o) const {
  return chain == o.chain && home == o.home && check_points == o.check_points && limits == o.limits &&
         depth == o.depth && grasps == o.grasps && place == o.place && planner == o.planner;
}

KinematicChain load_chain(const fs::path& path) {
  return chain_from_json(read_json_file(path), "robot.chain");
}

void save_chain(const KinematicChain& chain, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << chain_to_json(chain).dump(2) << '\n';
}

std::vector<double> read_heights_file(const fs::path& path, std::size_t count) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open heights file " + path.string());
  std::vector<std::uint32_t> raw(count);
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<std::size_t>(f.gcount()) != count * 4)
    throw ParseError(path.string() + ": expected " + std::to_string(count) + " float32 values");
  if (f.peek() != std::char_traits<char>::eof())
    throw ParseError(path.string() + ": more than " + std::to_string(count) + " float32 values");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = raw[i];
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void write_heights_file(const std::vector<double>& heights, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (double h : heights) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(h));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    f.write(reinterpret_cast<const char*>(&bits), 4);
  }
}

SceneConfig parse_scene(const std::string& text, const fs::path& base) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scene: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("scene: top level must be an object");

  SceneConfig s;
  const json& robot = require(root, "robot", "scene");
  const json& chain = require(robot, "chain", "robot");
  if (chain.is_string()) {
    fs::path cp = chain.get<std::string>();
    if (cp.is_relative()) cp = base / cp;
    s.chain = load_chain(cp);
  } else {
    s.chain = chain_from_json(chain, "robot.chain");
  }
  const int n = s.chain.joint_count();

  const json& lim = require(root, "limits", "scene");
  s.limits.q_min = per_joint(require(lim, "q_min", "limits"), "limits.q_min", n);
  s.limits.q_max = per_joint(require(lim, "q_max", "limits"), "limits.q_max", n);
  s.limits.v_max = per_joint(require(lim, "v_max", "limits"), "limits.v_max", n);
  s.limits.a_max = per_joint(require(lim, "a_max", "limits"), "limits.a_max", n);
  s.limits.validate("limits");

  if (const json* home = optional_field(robot, "home")) {
    s.home = vector(*home, "robot.home", n);
  } else {
    s.home = s.limits.clamp(Eigen::VectorXd::Zero(n));
  }
  if (const json* cps = optional_field(robot, "check_points")) {
    if (!cps->is_array()) bad("robot.check_points", "expected an array");
    for (std::size_t i = 0; i < cps->size(); ++i) {
      const std::string p = "robot.check_points[" + std::to_string(i) + "]";
      CheckPoint cp;
      cp.link = integer(require((*cps)[i], "link", p), p + ".link");
      cp.offset = vector(require((*cps)[i], "offset", p), p + ".offset", 3);
      s.check_points.push_back(cp);
    }
  }

  s.depth = depth_from_json(require(root, "depth", "scene"), base);

  const json& grasps = require(root, "grasps", "scene");
  if (!grasps.is_array()) bad("grasps", "expected an array");
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    const std::string p = "grasps[" + std::to_string(i) + "]";
    GraspCandidate c;
    c.frame = frame_from_json(require(grasps[i], "frame", p), p + ".frame");
    if (const json* sc = optional_field(grasps[i], "score")) c.score = number(*sc, p + ".score");
    if (const json* id = optional_field(grasps[i], "object_id")) {
      if (!id->is_string()) bad(p + ".object_id", "expected a string");
      c.object_id = id->get<std::string>();
    }
    if (const json* xy = optional_field(grasps[i], "image_xy")) c.image_xy = Eigen::Vector2d(vector(*xy, p + ".image_xy", 2));
    s.grasps.push_back(std::move(c));
  }
  s.place = frame_from_json(require(root, "place", "scene"), "place");

  if (const json* pl = optional_field(root, "planner")) {
    auto& P = s.planner;
    auto num = [&](const json& obj, const char* key, const std::string& path, double& out) {
      if (const json* v = optional_field(obj, key)) out = number(*v, path + "." + key);
    };
    auto intg = [&](const json& obj, const char* key, const std::string& path, int& out) {
      if (const json* v = optional_field(obj, key)) out = integer(*v, path + "." + key);
    };
    intg(*pl, "H_init", "planner", P.H_init);
    num(*pl, "t_step", "planner", P.t_step);
    intg(*pl, "i_max", "planner", P.i_max);
    num(*pl, "clearance_margin", "planner", P.trust.obstacle_margin);
    num(*pl, "safe_z", "planner", P.safe_z);
    num(*pl, "baseline_speed_fraction", "planner", P.baseline_speed_fraction);
    if (const json* bs = optional_field(*pl, "binary_search")) {
      if (!bs->is_boolean()) bad("planner.binary_search", "expected a boolean");
      P.binary_search = bs->get<bool>();
    }
    if (const json* tol = optional_field(*pl, "tolerances")) {
      num(*tol, "constraint", "planner.tolerances", P.constraint_tol);
      num(*tol, "linearization", "planner.tolerances", P.linearization_tol);
      num(*tol, "qp_eps", "planner.tolerances", P.qp_eps);
      intg(*tol, "qp_max_iter", "planner.tolerances", P.qp_max_iter);
    }
    if (const json* tr = optional_field(*pl, "trust_region")) {
      const std::string p = "planner.trust_region";
      num(*tr, "radius_q0", p, P.trust.radius_q0);
      num(*tr, "radius_qH", p, P.trust.radius_qH);
      num(*tr, "shrink", p, P.trust.shrink_factor);
      num(*tr, "grow", p, P.trust.grow_factor);
      num(*tr, "min_radius", p, P.trust.min_radius);
      num(*tr, "max_radius", p, P.trust.max_radius);
    }
  }
  s.validate();
  return s;
}

SceneConfig load_scene(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open scene " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scene(ss.str(), path.parent_path().empty() ? fs::current_path() : path.parent_path());
}

std::string scene_to_json(const SceneConfig& s) {
  json robot = {{"chain", chain_to_json(s.chain)}, {"home", to_json(s.home)}};
  json cps = json::array();
  for (const auto& cp : s.check_points) cps.push_back({{"link", cp.link}, {"offset", to_json(cp.offset)}});
  robot["check_points"] = cps;

  json grasps = json::array();
  for (const auto& g : s.grasps) {
    json e = {{"object_id", g.object_id}, {"score", g.score}, {"frame", frame_to_json(g.frame)}};
    if (g.image_xy) e["image_xy"] = {g.image_xy->x(), g.image_xy->y()};
    grasps.push_back(std::move(e));
  }
  const auto& P = s.planner;
  json root = {
      {"robot", robot},
      {"limits",
       {{"q_min", to_json(s.limits.q_min)},
        {"q_max", to_json(s.limits.q_max)},
        {"v_max", to_json(s.limits.v_max)},
        {"a_max", to_json(s.limits.a_max)}}},
      {"depth",
       {{"origin", to_json(s.depth.origin)},
        {"resolution", s.depth.resolution},
        {"width", s.depth.width},
        {"height", s.depth.height},
        {"heights", s.depth.heights},
        {"exterior_height", s.depth.exterior_height},
        {"dilation_radius", s.depth.dilation_radius}}},
      {"grasps", grasps},
      {"place", frame_to_json(s.place)},
      {"planner",
       {{"H_init", P.H_init},
        {"t_step", P.t_step},
        {"i_max", P.i_max},
        {"tolerances",
         {{"constraint", P.constraint_tol},
          {"linearization", P.linearization_tol},
          {"qp_eps", P.qp_eps},
          {"qp_max_iter", P.qp_max_iter}}},
        {"trust_region",
         {{"radius_q0", P.trust.radius_q0},
          {"radius_qH", P.trust.radius_qH},
          {"shrink", P.trust.shrink_factor},
          {"grow", P.trust.grow_factor},
          {"min_radius", P.trust.min_radius},
          {"max_radius", P.trust.max_radius}}},
        {"clearance_margin", P.trust.obstacle_margin},
        {"safe_z", P.safe_z},
        {"baseline_speed_fraction", P.baseline_speed_fraction},
        {"binary_search", P.binary_search}}}};
  return root.dump(2);
}

void save_scene(const SceneConfig& scene, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << scene_to_json(scene) << '\n';
}

std::vector<GraspCandidate> diversity_filter(const std::vector<GraspCandidate>& grasps, double d_min,
                                             DistanceSpace space) {
  if (!(d_min >= 0)) throw std::invalid_argument("d_min must be non-negative");
  std::vector<std::size_t> order(grasps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grasps[a].score > grasps[b].score; });
  auto distance = [&](const GraspCandidate& a, const GraspCandidate& b) {
    if (space == DistanceSpace::WorkspaceMeters)
      return (a.frame.pose.translation - b.frame.pose.translation).norm();
    if (!a.image_xy || !b.image_xy) throw std::invalid_argument("image-space filtering needs image_xy on every grasp");
    return (*a.image_xy - *b.image_xy).norm();
  };
  std::vector<GraspCandidate> kept;
  for (std::size_t idx : order) {
    const auto& g = grasps[idx];
    if (std::all_of(kept.begin(), kept.end(), [&](const GraspCandidate& k) { return distance(g, k) >= d_min; }))
      kept.push_back(g);
  }
  return kept;
}

}  // namespace gomp
