#include "gomp/depth_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gomp/errors.hpp"

namespace gomp {

DepthField DepthField::flat(const Eigen::Vector2d& origin, double resolution, int width,
                            int height, double z) {
  DepthField f;
  f.origin = origin;
  f.resolution = resolution;
  f.width = width;
  f.height = height;
  f.heights.assign(static_cast<std::size_t>(width) * height, z);
  f.exterior_height = 0.0;
  return f;
}

Eigen::Vector2d DepthField::cell_center(int ix, int iy) const {
  return origin + resolution * Eigen::Vector2d(ix + 0.5, iy + 0.5);
}

void DepthField::validate(const char* path) const {
  const std::string p(path);
  if (!std::isfinite(resolution) || !(resolution > 0))
    throw ValidationError(p + ".resolution", "must be positive");
  if (width < 1) throw ValidationError(p + ".width", "must be at least 1");
  if (height < 1) throw ValidationError(p + ".height", "must be at least 1");
  if (!origin.allFinite()) throw ValidationError(p + ".origin", "must be finite");
  if (heights.size() != static_cast<std::size_t>(width) * height)
    throw ValidationError(p + ".heights", "expected width*height = " +
                                              std::to_string(static_cast<long>(width) * height) +
                                              " values, got " + std::to_string(heights.size()));
  for (std::size_t i = 0; i < heights.size(); ++i) {
    if (!std::isfinite(heights[i]))
      throw ValidationError(p + ".heights[" + std::to_string(i) + "]", "height is not finite");
  }
  if (!std::isfinite(exterior_height))
    throw ValidationError(p + ".exterior_height", "must be finite");
  if (!std::isfinite(dilation_radius) || dilation_radius < 0)
    throw ValidationError(p + ".dilation_radius", "must be non-negative");
}

double query_height(const DepthField& depth, const Eigen::Vector2d& xy) {
  const Eigen::Vector2d rel = (xy - depth.origin) / depth.resolution;
  if (depth.dilation_radius <= 0.0) {
    const double fx = std::floor(rel.x());
    const double fy = std::floor(rel.y());
    if (!(fx >= 0 && fy >= 0 && fx < depth.width && fy < depth.height)) return depth.exterior_height;
    return depth.cell(static_cast<int>(fx), static_cast<int>(fy));
  }
  const double r = depth.dilation_radius / depth.resolution;
  const auto lo_x = static_cast<long>(std::floor(rel.x() - r));
  const auto hi_x = static_cast<long>(std::floor(rel.x() + r));
  const auto lo_y = static_cast<long>(std::floor(rel.y() - r));
  const auto hi_y = static_cast<long>(std::floor(rel.y() + r));
  double best = -std::numeric_limits<double>::infinity();
  bool outside = false;
  for (long iy = lo_y; iy <= hi_y; ++iy) {
    for (long ix = lo_x; ix <= hi_x; ++ix) {
      // Closest point of the cell square to the query, in cell units.
      const double cx = std::clamp(rel.x(), static_cast<double>(ix), static_cast<double>(ix + 1));
      const double cy = std::clamp(rel.y(), static_cast<double>(iy), static_cast<double>(iy + 1));
      if (std::hypot(cx - rel.x(), cy - rel.y()) > r) continue;
      if (ix < 0 || iy < 0 || ix >= depth.width || iy >= depth.height) {
        outside = true;
        continue;
      }
      best = std::max(best, depth.cell(static_cast<int>(ix), static_cast<int>(iy)));
    }
  }
  if (outside) best = std::max(best, depth.exterior_height);
  return best;
}

}  // namespace gomp
