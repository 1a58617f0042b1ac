#include "gomp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gomp/errors.hpp"

namespace gomp {
namespace {

constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqualityFactor = 1e3;
constexpr double kScaleMin = 1e-4;
constexpr double kScaleMax = 1e4;

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Eigen::VectorXd column_inf_norms(const SparseMatrix& m) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.cols());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      out[k] = std::max(out[k], std::abs(it.value()));
  return out;
}

Eigen::VectorXd row_inf_norms(const SparseMatrix& m) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
  return out;
}

double equilibrate(double norm) {
  if (norm < kScaleMin) return 1.0;
  return std::clamp(1.0 / std::sqrt(norm), 1.0 / std::sqrt(kScaleMax), 1.0 / std::sqrt(kScaleMin));
}

bool is_equality(double l, double u) {
  return std::isfinite(l) && std::abs(u - l) <= 1e-12 * std::max(1.0, std::abs(l));
}

enum class Side : signed char { Inactive = 0, Lower = -1, Upper = 1 };

}  // namespace

// ---------------------------------------------------------------------------
// QuadraticProgram

double QuadraticProgram::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(P * x) + p.dot(x);
}

void QuadraticProgram::validate() const {
  const auto d = P.rows();
  if (P.cols() != d) throw DimensionMismatch("P must be square");
  if (p.size() != d) throw DimensionMismatch("p length differs from P");
  if (A.cols() != d) throw DimensionMismatch("A column count differs from P");
  if (lower.size() != A.rows() || upper.size() != A.rows())
    throw DimensionMismatch("bound lengths differ from A row count");
  const SparseMatrix asym = SparseMatrix(P.transpose()) - P;
  for (int k = 0; k < asym.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(asym, k); it; ++it)
      if (std::abs(it.value()) > 1e-12) throw std::invalid_argument("P is not symmetric");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i])
      throw std::invalid_argument("constraint row " + std::to_string(i) + " has lower > upper");
  }
}

std::string QuadraticProgram::to_json() const {
  auto coo = [](const SparseMatrix& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<Eigen::Index> r, c;
    std::vector<double> v;
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        r.push_back(it.row());
        c.push_back(it.col());
        v.push_back(it.value());
      }
    j["row"] = r;
    j["col"] = c;
    j["val"] = v;
    return j;
  };
  auto vec = [](const Eigen::VectorXd& x) {
    nlohmann::json arr = nlohmann::json::array();
    for (double e : x) {
      if (std::isinf(e)) arr.push_back(e > 0 ? "inf" : "-inf");
      else arr.push_back(e);
    }
    return arr;
  };
  nlohmann::json j;
  j["P"] = coo(P);
  j["p"] = vec(p);
  j["A"] = coo(A);
  j["lower"] = vec(lower);
  j["upper"] = vec(upper);
  return j.dump();
}

void QuadraticProgram::dump_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json() << '\n';
}

QuadraticProgram update_bounds(const QuadraticProgram& qp, std::span<const Eigen::Index> rows,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (lower.size() != static_cast<Eigen::Index>(rows.size()) ||
      upper.size() != static_cast<Eigen::Index>(rows.size())) {
    throw DimensionMismatch("bound update lengths differ from the row set");
  }
  QuadraticProgram out = qp;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Eigen::Index r = rows[k];
    if (r < 0 || r >= qp.constraints()) throw DimensionMismatch("row index out of range");
    if (lower[k] > upper[k]) throw std::invalid_argument("new lower bound exceeds upper bound");
    out.lower[r] = lower[k];
    out.upper[r] = upper[k];
  }
  return out;
}

const char* to_string(QPStatus status) {
  switch (status) {
    case QPStatus::Solved: return "solved";
    case QPStatus::PrimalInfeasible: return "primal_infeasible";
    case QPStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Scaled problem data

struct QPSolver::Scaled {
  SparseMatrix P, A, At;
  Eigen::VectorXd q, l, u;
  Eigen::VectorXd D, E;  // variable / constraint scaling
  double c{1.0};         // cost scaling
  Eigen::VectorXd Dinv, Einv;

  Scaled(const QuadraticProgram& qp, int iterations) : P(qp.P), A(qp.A), q(qp.p) {
    const auto n = qp.variables();
    const auto m = qp.constraints();
    D = Eigen::VectorXd::Ones(n);
    E = Eigen::VectorXd::Ones(m);
    for (int k = 0; k < iterations; ++k) {
      const Eigen::VectorXd pc = column_inf_norms(P);
      const Eigen::VectorXd ac = column_inf_norms(A);
      const Eigen::VectorXd ar = row_inf_norms(A);
      Eigen::VectorXd dd(n), de(m);
      for (Eigen::Index j = 0; j < n; ++j) dd[j] = equilibrate(std::max(pc[j], ac[j]));
      for (Eigen::Index i = 0; i < m; ++i) de[i] = equilibrate(ar[i]);
      P = dd.asDiagonal() * P * dd.asDiagonal();
      A = de.asDiagonal() * A * dd.asDiagonal();
      q = dd.cwiseProduct(q);
      D = D.cwiseProduct(dd);
      E = E.cwiseProduct(de);
      const Eigen::VectorXd pc2 = column_inf_norms(P);
      const double mean_col = n > 0 ? pc2.mean() : 0.0;
      // A vanishing linear term counts as unit size, so a zero q never inflates the cost.
      double q_norm = inf_norm(q);
      if (q_norm < kScaleMin) q_norm = 1.0;
      double cost = std::max(mean_col, std::min(q_norm, kScaleMax));
      cost = cost < kScaleMin ? 1.0 : 1.0 / std::min(cost, kScaleMax);
      P *= cost;
      q *= cost;
      c *= cost;
    }
    l = qp.lower;
    u = qp.upper;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::isfinite(l[i])) l[i] *= E[i];
      if (std::isfinite(u[i])) u[i] *= E[i];
    }
    At = A.transpose();
    Dinv = D.cwiseInverse();
    Einv = E.cwiseInverse();
  }
};

QPSolver::QPSolver(QPSettings settings) : settings_(settings) {}

void QPSolver::factorize(const SparseMatrix& P, const SparseMatrix& A, const Eigen::VectorXd& rho) {
  SparseMatrix k = P + SparseMatrix(A.transpose() * rho.asDiagonal() * A);
  k += settings_.sigma * SparseMatrix(Eigen::VectorXd::Ones(P.rows()).asDiagonal());
  k.makeCompressed();
  const std::vector<int> outer(k.outerIndexPtr(), k.outerIndexPtr() + k.outerSize() + 1);
  const std::vector<int> inner(k.innerIndexPtr(), k.innerIndexPtr() + k.nonZeros());
  if (outer != pattern_outer_ || inner != pattern_inner_) {
    llt_.analyzePattern(k);
    pattern_outer_ = outer;
    pattern_inner_ = inner;
  }
  llt_.factorize(k);
  if (llt_.info() != Eigen::Success) throw std::runtime_error("QP system factorization failed");
}

QPResult QPSolver::solve(const QuadraticProgram& qp, const WarmStart* warm) {
  qp.validate();
  const auto n = qp.variables();
  const auto m = qp.constraints();
  const QPSettings& s = settings_;
  const Scaled sc(qp, s.scaling_iterations);

  // Per-row step sizes: stiff on equalities, negligible on free rows.
  Eigen::VectorXd rho_vec(m);
  double rho = s.rho;
  auto set_rho = [&](double r) {
    rho = std::clamp(r, kRhoMin, kRhoMax);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!std::isfinite(qp.lower[i]) && !std::isfinite(qp.upper[i])) rho_vec[i] = kRhoMin;
      else if (is_equality(qp.lower[i], qp.upper[i])) rho_vec[i] = kRhoEqualityFactor * rho;
      else rho_vec[i] = rho;
    }
  };
  set_rho(rho);
  factorize(sc.P, sc.A, rho_vec);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  if (warm != nullptr) {
    if (warm->x.size() == n) x = sc.Dinv.cwiseProduct(warm->x);
    if (warm->y && warm->y->size() == m) y = sc.c * sc.Einv.cwiseProduct(*warm->y);
  }
  Eigen::VectorXd ax = sc.A * x;
  Eigen::VectorXd z = ax.cwiseMax(sc.l).cwiseMin(sc.u);

  QPResult result;
  result.x = Eigen::VectorXd::Zero(n);
  result.y = Eigen::VectorXd::Zero(m);

  // Residual evaluation in unscaled space.
  struct Residuals {
    double prim, dual, eps_prim, eps_dual;
    double prim_norm_ratio, dual_norm_ratio;  // scaled, for rho adaptation
  };
  auto residuals = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& axs,
                       const Eigen::VectorXd& zs, const Eigen::VectorXd& ys) {
    Residuals r{};
    const Eigen::VectorXd px = sc.P * xs;
    const Eigen::VectorXd aty = sc.At * ys;
    const double inv_c = 1.0 / sc.c;
    r.prim = inf_norm(sc.Einv.cwiseProduct(axs - zs));
    const double ax_norm = inf_norm(sc.Einv.cwiseProduct(axs));
    const double z_norm = inf_norm(sc.Einv.cwiseProduct(zs));
    r.dual = inv_c * inf_norm(sc.Dinv.cwiseProduct(px + sc.q + aty));
    const double px_norm = inv_c * inf_norm(sc.Dinv.cwiseProduct(px));
    const double aty_norm = inv_c * inf_norm(sc.Dinv.cwiseProduct(aty));
    const double q_norm = inv_c * inf_norm(sc.Dinv.cwiseProduct(sc.q));
    r.eps_prim = s.eps_abs + s.eps_rel * std::max(ax_norm, z_norm);
    r.eps_dual = s.eps_abs + s.eps_rel * std::max({px_norm, aty_norm, q_norm});
    const double sp = inf_norm(axs - zs) / std::max({inf_norm(axs), inf_norm(zs), 1e-12});
    const double sd = inf_norm(px + sc.q + aty) /
                      std::max({inf_norm(px), inf_norm(aty), inf_norm(sc.q), 1e-12});
    r.prim_norm_ratio = sp;
    r.dual_norm_ratio = sd;
    return r;
  };

  auto unscale_into = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, QPResult& out) {
    out.x = sc.D.cwiseProduct(xs);
    out.y = sc.E.cwiseProduct(ys) / sc.c;
    out.objective = qp.objective(out.x);
  };

  // Active-set polish: solve the equality-constrained QP on the guessed active
  // set, then repair the guess until the KKT conditions hold or rounds run out.
  auto polish = [&](const Eigen::VectorXd& zs, const Eigen::VectorXd& ys, QPResult& out) -> bool {
    std::vector<Side> side(m, Side::Inactive);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (is_equality(sc.l[i], sc.u[i])) side[i] = Side::Upper;
      else if (zs[i] - sc.l[i] < -ys[i]) side[i] = Side::Lower;
      else if (sc.u[i] - zs[i] < ys[i]) side[i] = Side::Upper;
    }
    const double delta = 1e-9;
    for (int round = 0; round < 12; ++round) {
      std::vector<Eigen::Index> act;
      for (Eigen::Index i = 0; i < m; ++i)
        if (side[i] != Side::Inactive) act.push_back(i);
      const auto na = static_cast<Eigen::Index>(act.size());
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(sc.P.nonZeros() + n + 2 * sc.A.nonZeros() + na);
      Eigen::VectorXd row_of(m);
      row_of.setConstant(-1);
      for (Eigen::Index k = 0; k < na; ++k) row_of[act[k]] = static_cast<double>(k);
      for (int k = 0; k < sc.P.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sc.P, k); it; ++it)
          if (it.row() >= it.col()) trip.emplace_back(it.row(), it.col(), it.value());
      for (Eigen::Index j = 0; j < n; ++j) trip.emplace_back(j, j, delta);
      for (int k = 0; k < sc.A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sc.A, k); it; ++it) {
          const double r = row_of[it.row()];
          if (r >= 0) trip.emplace_back(n + static_cast<Eigen::Index>(r), it.col(), it.value());
        }
      for (Eigen::Index k = 0; k < na; ++k) trip.emplace_back(n + k, n + k, -delta);
      SparseMatrix kkt(n + na, n + na);
      kkt.setFromTriplets(trip.begin(), trip.end());
      kkt_.compute(kkt);
      if (kkt_.info() != Eigen::Success) return false;

      Eigen::VectorXd rhs(n + na);
      rhs.head(n) = -sc.q;
      for (Eigen::Index k = 0; k < na; ++k)
        rhs[n + k] = side[act[k]] == Side::Lower ? sc.l[act[k]] : sc.u[act[k]];
      Eigen::VectorXd sol = kkt_.solve(rhs);
      // Iterative refinement against the unregularized system.
      // Degenerate active sets make the unregularized system singular, so keep
      // refining while the residual still shrinks.
      double last = std::numeric_limits<double>::infinity();
      for (int r = 0; r < s.polish_refine_iterations; ++r) {
        Eigen::VectorXd ksol = kkt.selfadjointView<Eigen::Lower>() * sol;
        ksol.head(n) -= delta * sol.head(n);
        ksol.tail(na) += delta * sol.tail(na);
        const Eigen::VectorXd res = rhs - ksol;
        const double norm = inf_norm(res);
        if (norm < 1e-13 * std::max(1.0, inf_norm(rhs)) || norm >= last) break;
        last = norm;
        sol += kkt_.solve(res);
      }
      if (!sol.allFinite()) return false;
      const Eigen::VectorXd xp = sol.head(n);
      Eigen::VectorXd yp = Eigen::VectorXd::Zero(m);
      for (Eigen::Index k = 0; k < na; ++k) yp[act[k]] = sol[n + k];
      const Eigen::VectorXd axp = sc.A * xp;

      // Repair: add violated rows, drop rows whose multiplier has the wrong sign.
      bool changed = false;
      const double y_scale = std::max(1.0, inf_norm(yp));
      for (Eigen::Index i = 0; i < m; ++i) {
        const double v = axp[i] * sc.Einv[i];
        const double lo = sc.l[i] * sc.Einv[i];
        const double hi = sc.u[i] * sc.Einv[i];
        const double ftol = s.polish_feasibility_tol * std::max(1.0, std::abs(v));
        if (side[i] == Side::Inactive) {
          if (v > hi + ftol) { side[i] = Side::Upper; changed = true; }
          else if (v < lo - ftol) { side[i] = Side::Lower; changed = true; }
        } else if (!is_equality(sc.l[i], sc.u[i])) {
          const double ytol = 1e-9 * y_scale;
          if (side[i] == Side::Upper && yp[i] < -ytol) { side[i] = Side::Inactive; changed = true; }
          else if (side[i] == Side::Lower && yp[i] > ytol) { side[i] = Side::Inactive; changed = true; }
        }
      }
      if (changed) continue;

      const Eigen::VectorXd zp = axp.cwiseMax(sc.l).cwiseMin(sc.u);
      const Residuals r = residuals(xp, axp, zp, yp);
      if (!(r.prim <= std::max(r.eps_prim, 1e-7) && r.dual <= std::max(r.eps_dual, 1e-7))) return false;
      unscale_into(xp, yp, out);
      out.primal_residual = r.prim;
      out.dual_residual = r.dual;
      out.polished = true;
      return true;
    }
    return false;
  };

  Eigen::VectorXd rhs(n), x_tilde(n), z_tilde(m), z_prev(m), y_prev(m);
  for (int iter = 1; iter <= s.max_iter; ++iter) {
    z_prev = z;
    y_prev = y;
    rhs = s.sigma * x - sc.q + sc.At * (rho_vec.cwiseProduct(z) - y);
    x_tilde = llt_.solve(rhs);
    z_tilde = sc.A * x_tilde;
    x = s.alpha * x_tilde + (1.0 - s.alpha) * x;
    const Eigen::VectorXd z_relaxed = s.alpha * z_tilde + (1.0 - s.alpha) * z_prev;
    z = (z_relaxed + y.cwiseQuotient(rho_vec)).cwiseMax(sc.l).cwiseMin(sc.u);
    y += rho_vec.cwiseProduct(z_relaxed - z);
    ax = sc.A * x;

    const Residuals r = residuals(x, ax, z, y);
    result.iterations = iter;
    if (r.prim <= r.eps_prim && r.dual <= r.eps_dual) {
      result.status = QPStatus::Solved;
      if (!(s.polish && polish(z, y, result))) {
        unscale_into(x, y, result);
        result.primal_residual = r.prim;
        result.dual_residual = r.dual;
      }
      return result;
    }

    // Primal infeasibility: projected dual increment certifies an empty set.
    Eigen::VectorXd dy = sc.E.cwiseProduct(y - y_prev);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!std::isfinite(qp.upper[i])) dy[i] = std::min(dy[i], 0.0);
      if (!std::isfinite(qp.lower[i])) dy[i] = std::max(dy[i], 0.0);
    }
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 1e-30) {
      dy /= dy_norm;
      double support = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (dy[i] > 0) support += qp.upper[i] * dy[i];
        else if (dy[i] < 0) support += qp.lower[i] * dy[i];
      }
      if (support < -s.eps_prim_inf && inf_norm(qp.A.transpose() * dy) <= s.eps_prim_inf) {
        result.status = QPStatus::PrimalInfeasible;
        result.certificate = dy;
        result.primal_residual = r.prim;
        result.dual_residual = r.dual;
        unscale_into(x, y, result);
        return result;
      }
    }

    if (s.polish && s.polish_interval > 0 && iter % s.polish_interval == 0 &&
        polish(z, y, result)) {
      result.status = QPStatus::Solved;
      return result;
    }

    if (s.adaptive_rho && iter % s.adaptive_rho_interval == 0) {
      const double ratio = std::sqrt(r.prim_norm_ratio / std::max(r.dual_norm_ratio, 1e-30));
      const double proposed = std::clamp(rho * ratio, kRhoMin, kRhoMax);
      if (proposed > s.adaptive_rho_tolerance * rho || proposed < rho / s.adaptive_rho_tolerance) {
        set_rho(proposed);
        factorize(sc.P, sc.A, rho_vec);
      }
    }
  }
  result.status = QPStatus::IterationLimit;
  const Residuals r = residuals(x, ax, z, y);
  result.primal_residual = r.prim;
  result.dual_residual = r.dual;
  unscale_into(x, y, result);
  return result;
}

QPResult solve(const QuadraticProgram& qp, const std::optional<Eigen::VectorXd>& warm_start,
               double tol, int max_iter) {
  if (!(tol > 0)) throw std::invalid_argument("QP tolerance must be positive");
  QPSettings settings;
  settings.eps_abs = tol;
  settings.eps_rel = tol;
  settings.max_iter = max_iter;
  QPSolver solver(settings);
  if (warm_start) {
    WarmStart w{*warm_start, std::nullopt};
    return solver.solve(qp, &w);
  }
  return solver.solve(qp);
}

}  // namespace gomp
