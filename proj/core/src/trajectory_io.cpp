#include "gomp/trajectory_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gomp/errors.hpp"

namespace gomp {

using nlohmann::json;

std::string trajectory_to_json(const TrajectorySolution& sol) {
  const auto& x = sol.variables;
  json wps = json::array();
  for (int i = 0; i <= x.H; ++i) {
    const Eigen::VectorXd q = x.q(i);
    const Eigen::VectorXd v = x.v(i);
    wps.push_back({{"q", std::vector<double>(q.data(), q.data() + q.size())},
                   {"v", std::vector<double>(v.data(), v.data() + v.size())}});
  }
  json hist = json::array();
  for (const auto& h : sol.history)
    hist.push_back({{"h", h.h}, {"duration_s", h.duration_s}, {"sqp_iterations", h.sqp_iterations}});
  json root = {{"t_step", x.t_step},
               {"H", x.H},
               {"joints", x.n},
               {"duration_s", sol.duration()},
               {"waypoints", wps},
               {"history", hist},
               {"stop_reason", to_string(sol.stop_reason)},
               {"horizons_tried", sol.horizons_tried},
               {"grasp_index", sol.grasp_index}};
  return root.dump(2);
}

TrajectorySolution trajectory_from_json(const std::string& text) {
  TrajectorySolution sol;
  try {
    const json root = json::parse(text);
    const int H = root.at("H").get<int>();
    const int n = root.at("joints").get<int>();
    const double t = root.at("t_step").get<double>();
    if (H < 1 || n < 1 || !(t > 0)) throw ParseError("trajectory: invalid H, joints or t_step");
    const json& wps = root.at("waypoints");
    if (!wps.is_array() || wps.size() != static_cast<std::size_t>(H) + 1)
      throw ParseError("trajectory: expected H + 1 waypoints");
    TrajectoryVariables vars(H, n, t);
    for (int i = 0; i <= H; ++i) {
      const auto q = wps[i].at("q").get<std::vector<double>>();
      const auto v = wps[i].at("v").get<std::vector<double>>();
      if (q.size() != static_cast<std::size_t>(n) || v.size() != static_cast<std::size_t>(n))
        throw ParseError("trajectory: waypoint " + std::to_string(i) + " has the wrong joint count");
      vars.q(i) = Eigen::Map<const Eigen::VectorXd>(q.data(), n);
      vars.v(i) = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    }
    sol.variables = std::move(vars);
    if (root.contains("history")) {
      for (const auto& h : root.at("history"))
        sol.history.push_back({h.at("h").get<int>(), h.at("duration_s").get<double>(), h.value("sqp_iterations", 0)});
    }
    sol.grasp_index = root.value("grasp_index", -1);
    sol.horizons_tried = root.value("horizons_tried", 0);
    const std::string reason = root.value("stop_reason", std::string("infeasible"));
    for (auto r : {StopReason::Infeasible, StopReason::IterationCapped, StopReason::Deadline, StopReason::MinimumHorizon})
      if (reason == to_string(r)) sol.stop_reason = r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("trajectory: ") + e.what());
  }
  return sol;
}

void save_trajectory(const TrajectorySolution& sol, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << trajectory_to_json(sol) << '\n';
}

TrajectorySolution load_trajectory(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open trajectory " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return trajectory_from_json(ss.str());
}

void write_velocity_csv(const TrajectoryVariables& vars, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "index";
  for (int j = 0; j < vars.n; ++j) f << ",v" << j;
  for (int j = 0; j < vars.n; ++j) f << ",a" << j;
  f << '\n';
  f.precision(12);
  for (int i = 0; i < vars.H; ++i) {
    f << i;
    for (int j = 0; j < vars.n; ++j) f << ',' << vars.v(i)[j];
    for (int j = 0; j < vars.n; ++j) f << ',' << (vars.v(i + 1)[j] - vars.v(i)[j]) / vars.t_step;
    f << '\n';
  }
}

}  // namespace gomp
