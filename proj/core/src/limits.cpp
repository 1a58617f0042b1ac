#include "gomp/limits.hpp"

#include <cmath>
#include <string>

#include "gomp/errors.hpp"

namespace gomp {

MechanicalLimits MechanicalLimits::uniform(int n, double q_abs, double v_max, double a_max) {
  MechanicalLimits l;
  l.q_min = Eigen::VectorXd::Constant(n, -q_abs);
  l.q_max = Eigen::VectorXd::Constant(n, q_abs);
  l.v_max = Eigen::VectorXd::Constant(n, v_max);
  l.a_max = Eigen::VectorXd::Constant(n, a_max);
  return l;
}

void MechanicalLimits::validate(const char* path) const {
  const std::string p(path);
  const auto n = q_min.size();
  if (n < 1) throw ValidationError(p + ".q_min", "must be non-empty");
  if (q_max.size() != n) throw ValidationError(p + ".q_max", "length differs from q_min");
  if (v_max.size() != n) throw ValidationError(p + ".v_max", "length differs from q_min");
  if (a_max.size() != n) throw ValidationError(p + ".a_max", "length differs from q_min");
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::string idx = "[" + std::to_string(j) + "]";
    if (!std::isfinite(q_min[j]) || !std::isfinite(q_max[j]) || !(q_min[j] < q_max[j]))
      throw ValidationError(p + ".q_max" + idx, "requires finite q_min < q_max");
    if (!std::isfinite(v_max[j]) || !(v_max[j] > 0))
      throw ValidationError(p + ".v_max" + idx, "must be finite and positive");
    if (!std::isfinite(a_max[j]) || !(a_max[j] > 0))
      throw ValidationError(p + ".a_max" + idx, "must be finite and positive");
  }
}

bool MechanicalLimits::contains(const Eigen::VectorXd& q) const {
  return q.size() == q_min.size() && (q.array() >= q_min.array()).all() &&
         (q.array() <= q_max.array()).all();
}

Eigen::VectorXd MechanicalLimits::clamp(const Eigen::VectorXd& q) const {
  return q.cwiseMax(q_min).cwiseMin(q_max);
}

}  // namespace gomp
