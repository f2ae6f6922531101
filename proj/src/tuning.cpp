#include "pclasso/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pclasso/error.hpp"

namespace pclasso {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_grid(const Vector& grid) {
  if (grid.size() == 0) throw Error(ErrorKind::Usage, "s grid is empty");
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw Error(ErrorKind::Usage, "s grid values must be >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw Error(ErrorKind::Usage, "s grid must be ascending");
  }
}

// Held-out squared error for one (s, fold) cell; NaN when the training fit fails.
double cv_cell(const Dataset& data, const ConstraintSet& cs, const std::vector<int>& train,
               const std::vector<int>& test, double s, const FitSpec& spec) {
  try {
    FitSpec local = spec;
    local.s = s;
    const FitResult fit = fit_constrained(data.rows(train), cs, local);
    double err = 0.0;
    for (int j : test) {
      const double r = data.y[j] - fit.intercept - data.X.row(j).dot(fit.beta);
      err += r * r;
    }
    return err;
  } catch (const Error&) {
    return kNaN;
  }
}

struct CvPlan {
  std::vector<std::vector<int>> test;
  std::vector<std::vector<int>> train;
};

CvPlan plan(const Dataset& data, const Vector& grid, int folds, std::uint64_t seed) {
  check_grid(grid);
  const int n = static_cast<int>(data.n());
  if (folds < 2 || folds > n) throw Error(ErrorKind::Usage, "folds must satisfy 2 <= folds <= n");
  CvPlan out;
  out.test = make_folds(n, folds, seed);
  for (const auto& t : out.test) {
    std::vector<char> held(static_cast<size_t>(n), 0);
    for (int j : t) held[static_cast<size_t>(j)] = 1;
    std::vector<int> tr;
    for (int j = 0; j < n; ++j)
      if (!held[static_cast<size_t>(j)]) tr.push_back(j);
    out.train.push_back(std::move(tr));
  }
  return out;
}

TuningCurve reduce_cv(const Vector& grid, const std::vector<double>& cells, int folds) {
  TuningCurve curve;
  curve.grid = grid;
  curve.criterion = Criterion::CV;
  curve.folds = folds;
  curve.pe = Vector::Constant(grid.size(), kNaN);
  curve.valid.assign(static_cast<size_t>(grid.size()), 0);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    bool ok = true;
    for (int f = 0; f < folds; ++f) {
      const double v = cells[static_cast<size_t>(i * folds + f)];
      if (std::isnan(v)) {
        ok = false;
        break;
      }
      sum += v;
    }
    if (ok) {
      curve.pe[i] = sum;
      curve.valid[static_cast<size_t>(i)] = 1;
    } else {
      curve.diagnostics.push_back("s=" + std::to_string(grid[i]) + ": a training fit failed");
    }
  }
  select_minimum(curve);
  return curve;
}

}  // namespace

const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::CV: return "cv";
    case Criterion::GCV: return "gcv";
    case Criterion::BIC: return "bic";
  }
  return "?";
}

Criterion parse_criterion(const std::string& name) {
  if (name == "cv") return Criterion::CV;
  if (name == "gcv") return Criterion::GCV;
  if (name == "bic") return Criterion::BIC;
  throw Error(ErrorKind::Usage, "unknown criterion '" + name + "' (expected cv, gcv or bic)");
}

Vector make_s_grid(const Dataset& data, const ConstraintSet& cs, int count, const FitSpec& spec) {
  if (count < 2) throw Error(ErrorKind::Usage, "grid count must be >= 2");
  const ConstraintSet effective = cs.dim() == 0 && cs.empty() ? ConstraintSet(static_cast<int>(data.p())) : cs;
  const QuadraticLoss loss = data_loss(data, effective, spec.intercept);
  const Eigen::Index d = loss.g.size();
  Vector ref = Eigen::CompleteOrthogonalDecomposition<Matrix>(loss.H).solve(loss.g);
  if (effective.A().rows() + effective.E().rows() > 0) {
    ConstraintSet cs_model = effective;
    if (effective.dim() != d) {
      std::vector<int> map(static_cast<size_t>(effective.dim()));
      std::iota(map.begin(), map.end(), static_cast<int>(d - effective.dim()));
      cs_model = effective.lifted(static_cast<int>(d), map);
    }
    QpProblem proj(Matrix::Identity(d, d), -ref, cs_model.A(), cs_model.a(), cs_model.E(), cs_model.e());
    const QpSolution sol = solve_qp(proj, std::nullopt, spec.qp);
    if (sol.status == QpStatus::Infeasible)
      throw Error(ErrorKind::InfeasibleConstraints, "linear prior constraints are infeasible");
    if (sol.status != QpStatus::Optimal)
      throw Error(ErrorKind::SolverFailure, std::string("grid projection failed: ") + to_string(sol.status));
    ref = sol.x;
  }
  const Eigen::Index p = data.p();
  const Vector beta = ref.tail(p);
  const Vector w = spec.weights.value_or(Vector::Ones(p));
  const double smax = w.dot(beta.cwiseAbs());
  Vector grid(count);
  for (int i = 0; i < count; ++i) grid[i] = smax * static_cast<double>(i) / static_cast<double>(count - 1);
  grid[count - 1] = smax;
  return grid;
}

std::vector<std::vector<int>> make_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) throw Error(ErrorKind::Usage, "folds must satisfy 2 <= folds <= n");
  std::vector<std::vector<int>> out(static_cast<size_t>(folds));
  if (folds == n) {
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(j)].push_back(j);
    return out;
  }
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < n; ++i) {
    const auto f = static_cast<size_t>(static_cast<long long>(i) * folds / n);
    out[f].push_back(perm[static_cast<size_t>(i)]);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

TuningCurve cross_validate(const Dataset& data, const ConstraintSet& cs, const Vector& grid, int folds,
                           const FitSpec& spec, std::uint64_t seed) {
  const CvPlan pl = plan(data, grid, folds, seed);
  const long long cells = static_cast<long long>(grid.size()) * folds;
  std::vector<double> err(static_cast<size_t>(cells));
#pragma omp parallel for schedule(dynamic)
  for (long long c = 0; c < cells; ++c) {
    const auto i = c / folds;
    const auto f = static_cast<size_t>(c % folds);
    err[static_cast<size_t>(c)] = cv_cell(data, cs, pl.train[f], pl.test[f], grid[i], spec);
  }
  return reduce_cv(grid, err, folds);
}

TuningCurve cross_validate_serial(const Dataset& data, const ConstraintSet& cs, const Vector& grid, int folds,
                                  const FitSpec& spec, std::uint64_t seed) {
  const CvPlan pl = plan(data, grid, folds, seed);
  std::vector<double> err;
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    for (int f = 0; f < folds; ++f)
      err.push_back(cv_cell(data, cs, pl.train[static_cast<size_t>(f)], pl.test[static_cast<size_t>(f)], grid[i], spec));
  return reduce_cv(grid, err, folds);
}

double information_value(Criterion criterion, double rss, int df, Eigen::Index n, bool deviance) {
  const double nn = static_cast<double>(n);
  if (!std::isfinite(rss) || rss < 0.0) return kNaN;
  if (criterion == Criterion::GCV) {
    if (df >= n) return kNaN;
    const double r = 1.0 - df / nn;
    return rss / (nn * r * r);
  }
  if (criterion == Criterion::BIC) {
    if (deviance) return rss + std::log(nn) * df;
    if (rss <= 0.0) return kNaN;
    return nn * std::log(rss / nn) + std::log(nn) * df;
  }
  throw Error(ErrorKind::Usage, "information_value: CV is not an information criterion");
}

TuningCurve information_curve(const Vector& grid, Eigen::Index n, Criterion criterion,
                              const std::function<LossAndDf(double)>& fit_at, bool deviance) {
  check_grid(grid);
  const Eigen::Index m = grid.size();
  std::vector<double> value(static_cast<size_t>(m), kNaN);
  std::vector<std::string> why(static_cast<size_t>(m));
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < m; ++i) {
    try {
      const LossAndDf r = fit_at(grid[i]);
      value[static_cast<size_t>(i)] = information_value(criterion, r.rss, r.df, n, deviance);
      if (std::isnan(value[static_cast<size_t>(i)]))
        why[static_cast<size_t>(i)] = criterion == Criterion::GCV ? "df >= n" : "zero residual sum of squares";
    } catch (const Error& e) {
      why[static_cast<size_t>(i)] = e.what();
    }
  }
  TuningCurve curve;
  curve.grid = grid;
  curve.criterion = criterion;
  curve.pe = Vector::Constant(m, kNaN);
  curve.valid.assign(static_cast<size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = value[static_cast<size_t>(i)];
    if (!std::isnan(v)) {
      curve.pe[i] = v;
      curve.valid[static_cast<size_t>(i)] = 1;
    } else {
      curve.diagnostics.push_back("s=" + std::to_string(grid[i]) + ": " + why[static_cast<size_t>(i)]);
    }
  }
  select_minimum(curve);
  return curve;
}

namespace {

TuningCurve data_information_curve(const Dataset& data, const ConstraintSet& cs, const Vector& grid,
                                   const FitSpec& spec, Criterion criterion) {
  return information_curve(grid, data.n(), criterion, [&](double s) {
    FitSpec local = spec;
    local.s = s;
    const FitResult fit = fit_constrained(data, cs, local);
    return LossAndDf{fit.objective, fit.df};
  });
}

}  // namespace

TuningCurve gcv_curve(const Dataset& data, const ConstraintSet& cs, const Vector& grid, const FitSpec& spec) {
  return data_information_curve(data, cs, grid, spec, Criterion::GCV);
}

TuningCurve bic_curve(const Dataset& data, const ConstraintSet& cs, const Vector& grid, const FitSpec& spec) {
  return data_information_curve(data, cs, grid, spec, Criterion::BIC);
}

void select_minimum(TuningCurve& curve) {
  curve.selected_index = -1;
  for (Eigen::Index i = 0; i < curve.pe.size(); ++i) {
    if (!curve.valid[static_cast<size_t>(i)]) continue;
    if (curve.selected_index < 0 || curve.pe[i] < curve.pe[curve.selected_index])
      curve.selected_index = static_cast<int>(i);
  }
  if (curve.selected_index < 0) throw Error(ErrorKind::TuningFailed, "no grid point produced a valid criterion value");
  curve.selected_s = curve.grid[curve.selected_index];
}

TuningCurve tune(const Dataset& data, const ConstraintSet& cs, const FitSpec& spec, const TuneOptions& opts) {
  const Vector grid = make_s_grid(data, cs, opts.grid_count, spec);
  switch (opts.criterion) {
    case Criterion::CV: {
      const int k = opts.folds == 0 ? static_cast<int>(data.n()) : opts.folds;
      return cross_validate(data, cs, grid, k, spec, opts.seed);
    }
    case Criterion::GCV: return gcv_curve(data, cs, grid, spec);
    case Criterion::BIC: return bic_curve(data, cs, grid, spec);
  }
  throw Error(ErrorKind::Usage, "unknown criterion");
}

}  // namespace pclasso
