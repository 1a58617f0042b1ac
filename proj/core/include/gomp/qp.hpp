#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace gomp {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// minimize 0.5 x'Px + p'x  subject to  lower <= Ax <= upper.
/// Equalities are rows with lower == upper; one-sided rows use +/-infinity.
struct QuadraticProgram {
  SparseMatrix P;  ///< full symmetric storage
  Eigen::VectorXd p;
  SparseMatrix A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index variables() const { return P.rows(); }
  Eigen::Index constraints() const { return A.rows(); }

  double objective(const Eigen::VectorXd& x) const;

  /// Throws DimensionMismatch / std::invalid_argument on malformed problems.
  void validate() const;

  /// Coordinate-list JSON dump (P, p, A, lower, upper) for triage.
  std::string to_json() const;
  void dump_json(const std::string& path) const;
};

/// Returns a copy with the bounds of `rows` replaced; the matrices are untouched.
QuadraticProgram update_bounds(const QuadraticProgram& qp, std::span<const Eigen::Index> rows,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

enum class QPStatus { Solved, PrimalInfeasible, IterationLimit };

const char* to_string(QPStatus status);

struct QPResult {
  QPStatus status{QPStatus::IterationLimit};
  Eigen::VectorXd x;  ///< primal solution, valid when Solved
  Eigen::VectorXd y;  ///< constraint multipliers (positive on active upper bounds)
  int iterations{0};
  double primal_residual{0.0};
  double dual_residual{0.0};
  double objective{0.0};
  bool polished{false};
  /// Normalized (max-abs = 1) infeasibility certificate when PrimalInfeasible:
  /// A'y ~ 0 and upper'max(y,0) + lower'min(y,0) < 0.
  Eigen::VectorXd certificate;
};

struct QPSettings {
  double eps_abs{1e-4};
  double eps_rel{1e-4};
  double eps_prim_inf{1e-6};
  int max_iter{4000};
  double rho{0.1};
  double sigma{1e-6};
  double alpha{1.6};
  bool adaptive_rho{true};
  int adaptive_rho_interval{25};
  double adaptive_rho_tolerance{5.0};
  int scaling_iterations{10};
  bool polish{true};
  int polish_refine_iterations{50};
  /// Bound violation that still counts as feasible for a polished solution.
  double polish_feasibility_tol{1e-9};
  /// Attempt a polish every this many iterations while ADMM is still running
  /// (0 disables). A polished point satisfying the KKT conditions ends the solve.
  int polish_interval{100};
};

struct WarmStart {
  Eigen::VectorXd x;
  std::optional<Eigen::VectorXd> y;
};

/// Operator-splitting (ADMM) solver with Ruiz equilibration, adaptive step
/// size, primal infeasibility detection and active-set polishing.
///
/// An instance owns mutable workspace: it is movable between threads but not
/// shareable. Successive solves with an identical KKT sparsity pattern reuse the
/// symbolic factorization.
class QPSolver {
 public:
  explicit QPSolver(QPSettings settings = {});

  QPResult solve(const QuadraticProgram& qp, const WarmStart* warm = nullptr);

  const QPSettings& settings() const { return settings_; }
  QPSettings& settings() { return settings_; }

 private:
  struct Scaled;
  void factorize(const SparseMatrix& P, const SparseMatrix& A, const Eigen::VectorXd& rho);

  QPSettings settings_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> kkt_;
  std::vector<int> pattern_outer_;
  std::vector<int> pattern_inner_;
};

/// Convenience wrapper around a fresh QPSolver.
QPResult solve(const QuadraticProgram& qp, const std::optional<Eigen::VectorXd>& warm_start,
               double tol = 1e-4, int max_iter = 4000);

}  // namespace gomp
