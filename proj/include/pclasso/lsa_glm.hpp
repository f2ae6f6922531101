#pragma once

#include <string>
#include <string_view>

#include "pclasso/estimator.hpp"
#include "pclasso/tuning.hpp"

namespace pclasso {

// External marks a surrogate read from a file rather than fitted here.
enum class Family { Gaussian, Logistic, External };

const char* to_string(Family f);
Family parse_family(const std::string& name);

/// Quadratic approximation (t - beta_tilde)' precision (t - beta_tilde) of n^{-1} L_n,
/// with precision = n^{-1} times the Hessian of L_n at beta_tilde.
/// Loss scales: Gaussian L_n = RSS, Logistic L_n = -2 log-likelihood.
/// When has_intercept is set, coordinate 0 is the intercept.
struct LsaSurrogate {
  Vector beta_tilde;
  Matrix precision;
  Eigen::Index n = 0;
  double loss_value = 0.0;
  Family family = Family::Gaussian;
  bool has_intercept = false;
  int iterations = 0;
};

struct LsaOptions {
  bool intercept = true;
  double grad_tol = 1e-8;
  int max_iter = 100;
  double divergence_bound = 1e3;
};

/// L_n at t (t includes the intercept when `intercept` is set).
double family_loss(Family family, const Dataset& data, const Vector& t, bool intercept);
Vector family_gradient(Family family, const Dataset& data, const Vector& t, bool intercept);

/// Unpenalized fit: OLS for Gaussian, IRLS for Logistic.
LsaSurrogate fit_unpenalized(Family family, const Dataset& data, const LsaOptions& opts = {});

double lsa_loss(const LsaSurrogate& surrogate, const Vector& t);

/// Constrained lasso on the surrogate. FitResult.objective is lsa_loss at the solution.
FitResult fit_lsa_constrained(const LsaSurrogate& surrogate, const ConstraintSet& cs, const FitSpec& spec);

/// Surrogate-scale deviance L_n(beta_tilde) + n/2 * lsa_loss; equals RSS for Gaussian.
double surrogate_deviance(const LsaSurrogate& surrogate, const FitResult& fit);

/// Budget grid from the surrogate minimizer projected onto the linear constraints.
Vector lsa_s_grid(const LsaSurrogate& surrogate, const ConstraintSet& cs, int count, const FitSpec& spec = {});

/// GCV or BIC on the surrogate deviance scale; CV is rejected (no per-row loss).
TuningCurve tune_lsa(const LsaSurrogate& surrogate, const ConstraintSet& cs, const FitSpec& spec, int grid_count,
                     Criterion criterion);

/// {"beta_tilde": [...], "precision": [[...]], "n": int} with optional "loss_value",
/// "intercept" (bool) and "family".
LsaSurrogate parse_surrogate_json(std::string_view text);
std::string surrogate_to_json(const LsaSurrogate& surrogate);

}  // namespace pclasso
