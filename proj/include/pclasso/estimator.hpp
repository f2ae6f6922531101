#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pclasso/constraints.hpp"
#include "pclasso/dataset.hpp"
#include "pclasso/initializer.hpp"
#include "pclasso/qp_solver.hpp"

namespace pclasso {

/// Settings for one constrained-lasso fit.
struct FitSpec {
  // L1 budget; +inf disables the budget row.
  double s = std::numeric_limits<double>::infinity();
  // Per-coefficient weights lambda_j >= 0 (all ones when absent).
  std::optional<Vector> weights;
  double sparsity_tol = 1e-6;
  bool standardize = true;
  bool intercept = true;
  int sl_max_rounds = 30;
  double sl_tol = 1e-8;
  double feasibility_tol = 1e-9;
  QpOptions qp;
  // Monte Carlo start for nonlinear constraints.
  int mc_draws = McConfig::kDefaultDraws;
  std::uint64_t mc_seed = 0;

  void validate(Eigen::Index p) const;
};

struct SolverInfo {
  std::string status = "Optimal";
  int qp_iterations = 0;
  int sl_rounds = 0;
  double jitter = 0.0;
  // Multiplier of the L1 budget row (0 when slack or absent).
  double budget_multiplier = 0.0;
  // Multipliers aligned with evaluate(cs, .) entries.
  Vector constraint_multipliers;
  bool used_mc_start = false;
  std::vector<std::string> warnings;
};

struct FitResult {
  Vector beta;
  double intercept = 0.0;
  double l1_norm = 0.0;
  // Residual sum of squares (surrogate loss for LSA fits).
  double objective = 0.0;
  std::vector<int> active_constraints;
  std::vector<int> zero_set;
  int df = 0;
  SolverInfo solver_info;
};

/// Quadratic loss t'Ht - 2 g't + c0 over the model coordinates t. When `has_intercept`
/// is set, coordinate 0 is an unpenalized intercept and the rest are coefficients.
struct QuadraticLoss {
  Matrix H;
  Vector g;
  double c0 = 0.0;
  bool has_intercept = false;

  double value(const Vector& t) const { return t.dot(H * t) - 2.0 * g.dot(t) + c0; }
};

/// Minimizes ||y - X beta||^2 subject to sum_j w_j |beta_j| <= s and g(beta) <= 0.
FitResult fit_constrained(const Dataset& data, const ConstraintSet& cs, const FitSpec& spec);

/// Minimizes ||y - X beta||^2 + sum_j lambda1_j |beta_j| + lambda2' g(beta). `lambda1`
/// has length 1 (shared) or p; `lambda2` is aligned with evaluate(cs, .). The budget in
/// `spec.s` is ignored.
FitResult fit_penalized(const Dataset& data, const ConstraintSet& cs, const Vector& lambda1,
                        const Vector& lambda2, const FitSpec& spec);

/// Constrained lasso on an arbitrary quadratic loss; the shared engine behind
/// fit_constrained and the least-squares approximation.
FitResult fit_quadratic(const QuadraticLoss& loss, const ConstraintSet& cs, const FitSpec& spec);

/// Entries with |beta_j| <= tol become exactly 0; returns the zeroed indices.
std::pair<Vector, std::vector<int>> sparsify(const Vector& beta, double tol);

/// Quadratic loss of the data under the intercept convention implied by `cs`.
QuadraticLoss data_loss(const Dataset& data, const ConstraintSet& cs, bool intercept);

/// Ordinary least squares (minimum-norm when X'X is singular), with centering when
/// `intercept` is set. Returns (intercept, beta).
std::pair<double, Vector> ols(const Dataset& data, bool intercept);

double residual_sum_of_squares(const Dataset& data, const FitResult& fit);

}  // namespace pclasso
