#pragma once

#include <vector>

#include <Eigen/Core>

namespace gomp {

/// Heightfield obstacle model over the workspace xy plane.
///
/// Cell (ix, iy) covers [origin + (ix, iy) * resolution, origin + (ix+1, iy+1) * resolution)
/// and its height is stored row-major at `heights[iy * width + ix]`.
struct DepthField {
  Eigen::Vector2d origin{Eigen::Vector2d::Zero()};
  double resolution{0.01};
  int width{1};
  int height{1};
  std::vector<double> heights{0.0};
  double exterior_height{0.0};
  /// Footprint radius: a query returns the maximum height over the disc.
  double dilation_radius{0.0};

  static DepthField flat(const Eigen::Vector2d& origin, double resolution, int width, int height,
                         double z);

  double cell(int ix, int iy) const { return heights[static_cast<std::size_t>(iy) * width + ix]; }
  double& cell(int ix, int iy) { return heights[static_cast<std::size_t>(iy) * width + ix]; }
  Eigen::Vector2d cell_center(int ix, int iy) const;

  /// Throws ValidationError naming the field (prefixed by `path`).
  void validate(const char* path = "depth") const;

  bool operator==(const DepthField&) const = default;
};

/// Height of the cell containing `xy` (no interpolation), or the exterior
/// height outside the grid. With a dilation radius, the maximum over every
/// cell touched by the disc.
double query_height(const DepthField& depth, const Eigen::Vector2d& xy);

}  // namespace gomp
