#pragma once

#include <filesystem>
#include <string>

#include "gomp/timeopt.hpp"

namespace gomp {

/// {t_step, H, joints, waypoints: [{q, v}], duration_s, history: [{h, duration_s}], grasp_index}
std::string trajectory_to_json(const TrajectorySolution& sol);
TrajectorySolution trajectory_from_json(const std::string& text);

void save_trajectory(const TrajectorySolution& sol, const std::filesystem::path& path);
/// Throws ParseError on malformed files.
TrajectorySolution load_trajectory(const std::filesystem::path& path);

/// One row per interval: index, then per-joint velocity v_i, then per-joint
/// acceleration (v_{i+1} - v_i) / t_step.
void write_velocity_csv(const TrajectoryVariables& vars, const std::filesystem::path& path);

}  // namespace gomp
