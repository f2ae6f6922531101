#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pclasso/constraints.hpp"
#include "pclasso/dataset.hpp"

// Deliberately naive reference computations. Nothing here calls the QP solver or the
// estimator; constraints are evaluated with plain dot products.
namespace pclasso::oracle {

struct GridSpec {
  Vector lower;
  Vector upper;
  double resolution = 1e-3;
  long long max_points = 100000000;

  // Symmetric box [-half, half]^p snapped outward to the resolution so 0 is a grid point.
  static GridSpec box(Eigen::Index p, double half, double resolution);
};

struct OracleFit {
  Vector beta;
  double objective = 0.0;  // residual sum of squares
  long long points = 0;    // grid points inside the budget that were evaluated
};

/// Residual sum of squares; with `intercept` the intercept is profiled out (centered data).
double oracle_rss(const Dataset& data, const Vector& beta, bool intercept);

/// Plain check of sum w|b| <= s, A b <= a, E b = e and every nonlinear constraint.
bool oracle_feasible(const ConstraintSet& cs, const Vector& beta, double s, const Vector& weights, double tol);

/// Exhaustive scan of the grid; feasible minimizer of the RSS, lexicographically smallest
/// beta on ties. Throws GridTooLarge or NoFeasiblePoint.
OracleFit brute_force_fit(const Dataset& data, const ConstraintSet& cs, double s, const GridSpec& grid,
                          bool intercept = false, const std::optional<Vector>& weights = std::nullopt);

/// Exact minimizer for linear constraints: every sign pattern and every subset of rows
/// (budget included) held as equalities, each solved from its KKT system.
OracleFit face_enumeration_fit(const Dataset& data, const ConstraintSet& cs, double s, bool intercept = false,
                               const std::optional<Vector>& weights = std::nullopt);

/// Face enumeration when all constraints are linear; otherwise repeated local grid scans
/// around `start`, shrinking the step tenfold each level.
OracleFit polish(const Dataset& data, const ConstraintSet& cs, double s, const OracleFit& start, double resolution,
                 bool intercept = false, const std::optional<Vector>& weights = std::nullopt,
                 double final_resolution = 1e-9);

/// (intercept, beta) fitted on a training set at budget s.
using FitFn = std::function<std::pair<double, Vector>(const Dataset& train, double s)>;

/// Literal leave-one-out double loop: PE_s = sum_j (y_j - yhat_j^{(-j)})^2.
Vector naive_loo_cv(const Dataset& data, const Vector& grid, const FitFn& fit_fn);

/// Newton's method on the logistic log-likelihood, written out directly.
Vector newton_logistic(const Matrix& X, const Vector& y, bool intercept, double tol = 1e-12, int max_iter = 200);

/// Minimizer of ||b - z||^2 over sum|b| <= s with b_j >= 0 where nonneg[j] is set.
Vector soft_threshold_budget(const Vector& z, double s, const std::vector<char>& nonneg);

/// Hand-style count p - #zeros - #active; each equality row counts once.
int counted_df(const Vector& beta, const ConstraintSet& cs, double tol);

}  // namespace pclasso::oracle
