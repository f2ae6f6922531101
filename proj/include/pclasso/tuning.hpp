#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pclasso/estimator.hpp"

namespace pclasso {

enum class Criterion { CV, GCV, BIC };

const char* to_string(Criterion c);
Criterion parse_criterion(const std::string& name);

struct TuningCurve {
  Vector grid;  // ascending
  Vector pe;    // criterion value per grid point (NaN where invalid)
  std::vector<char> valid;
  Criterion criterion = Criterion::CV;
  int folds = 0;  // CV only
  int selected_index = -1;
  double selected_s = 0.0;
  std::vector<std::string> diagnostics;
};

struct TuneOptions {
  int grid_count = 50;
  // 0 means leave-one-out (folds = n).
  int folds = 0;
  Criterion criterion = Criterion::CV;
  std::uint64_t seed = 0;
};

/// `count` budgets spaced uniformly on [0, S_max], S_max = sum_j w_j |b_j| for the OLS fit
/// projected onto the linear constraints.
Vector make_s_grid(const Dataset& data, const ConstraintSet& cs, int count, const FitSpec& spec = {});

/// Row partition used by cross_validate: singletons in order when folds == n, otherwise
/// near-equal contiguous chunks of a seeded shuffle.
std::vector<std::vector<int>> make_folds(int n, int folds, std::uint64_t seed);

/// Summed held-out squared prediction error per grid point. Cells (s, fold) run in parallel
/// and are reduced in (grid, fold) order.
TuningCurve cross_validate(const Dataset& data, const ConstraintSet& cs, const Vector& grid, int folds,
                           const FitSpec& spec, std::uint64_t seed);
TuningCurve cross_validate_serial(const Dataset& data, const ConstraintSet& cs, const Vector& grid, int folds,
                                  const FitSpec& spec, std::uint64_t seed);

TuningCurve gcv_curve(const Dataset& data, const ConstraintSet& cs, const Vector& grid, const FitSpec& spec);
TuningCurve bic_curve(const Dataset& data, const ConstraintSet& cs, const Vector& grid, const FitSpec& spec);

/// Residual-sum-of-squares and df at one budget; used to build GCV/BIC curves over any loss.
struct LossAndDf {
  double rss = 0.0;
  int df = 0;
};
/// With `deviance` set the loss is read as -2 log-likelihood and BIC is loss + log(n) df.
TuningCurve information_curve(const Vector& grid, Eigen::Index n, Criterion criterion,
                              const std::function<LossAndDf(double)>& fit_at, bool deviance = false);

/// GCV or BIC value for one grid point; NaN when the point is invalid.
double information_value(Criterion criterion, double rss, int df, Eigen::Index n, bool deviance = false);

/// Fills selected_index/selected_s: argmin over valid points, smaller s on ties.
void select_minimum(TuningCurve& curve);

/// Grid construction plus the chosen criterion.
TuningCurve tune(const Dataset& data, const ConstraintSet& cs, const FitSpec& spec, const TuneOptions& opts);

}  // namespace pclasso
