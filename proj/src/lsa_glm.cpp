#include "pclasso/lsa_glm.hpp"

#include <cmath>
#include <numeric>

#include "json.hpp"

#include "pclasso/error.hpp"
#include "pclasso/inference.hpp"

namespace pclasso {

namespace {

using json = nlohmann::json;

Matrix design(const Dataset& data, bool intercept) {
  if (!intercept) return data.X;
  Matrix X1(data.n(), data.p() + 1);
  X1.col(0).setOnes();
  X1.rightCols(data.p()) = data.X;
  return X1;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logistic_loss(const Matrix& X1, const Vector& y, const Vector& t) {
  const Vector eta = X1 * t;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) sum += softplus(eta[i]) - y[i] * eta[i];
  return 2.0 * sum;
}

Vector logistic_prob(const Matrix& X1, const Vector& t) {
  Vector eta = X1 * t;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
  return eta;
}

void check_binary(const Vector& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw Error(ErrorKind::Data, "logistic response must be 0 or 1 (row " + std::to_string(i + 1) + ")");
}

LsaSurrogate fit_logistic(const Dataset& data, const LsaOptions& opts) {
  check_binary(data.y);
  const Matrix X1 = design(data, opts.intercept);
  const Eigen::Index d = X1.cols();
  const auto n = static_cast<double>(data.n());
  Vector t = Vector::Zero(d);
  double loss = logistic_loss(X1, data.y, t);
  LsaSurrogate out;
  bool done = false;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Vector pi = logistic_prob(X1, t);
    const Vector grad = -2.0 * X1.transpose() * (data.y - pi);
    out.iterations = it - 1;
    if (grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      done = true;
      break;
    }
    const Vector w = pi.array() * (1.0 - pi.array());
    const Matrix H = 2.0 * X1.transpose() * w.asDiagonal() * X1;
    Eigen::LDLT<Matrix> ldlt(H);
    Vector step = ldlt.solve(-grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite())
      throw Error(ErrorKind::NonConvergence, "logistic Hessian is singular");
    // Step halving keeps the loss from increasing.
    double scale = 1.0;
    Vector next = t + step;
    double next_loss = logistic_loss(X1, data.y, next);
    for (int h = 0; h < 40 && next_loss > loss; ++h) {
      scale *= 0.5;
      next = t + scale * step;
      next_loss = logistic_loss(X1, data.y, next);
    }
    const double moved = (scale * step).lpNorm<Eigen::Infinity>();
    t = next;
    loss = std::min(loss, next_loss);
    if (t.lpNorm<Eigen::Infinity>() > opts.divergence_bound)
      throw Error(ErrorKind::SeparationDetected,
                  "coefficients diverged past " + std::to_string(opts.divergence_bound) + "; data look separable");
    if (moved <= 1e-15 * (1.0 + t.lpNorm<Eigen::Infinity>())) {
      out.iterations = it;
      done = true;
      break;
    }
  }
  if (!done) throw Error(ErrorKind::NonConvergence, "IRLS hit the iteration cap");
  const Vector pi = logistic_prob(X1, t);
  // The gradient also vanishes along a separating direction; catch that case here.
  if ((data.y - pi).lpNorm<Eigen::Infinity>() < 1e-6)
    throw Error(ErrorKind::SeparationDetected, "every observation is fitted perfectly; data look separable");
  const Vector w = pi.array() * (1.0 - pi.array());
  out.beta_tilde = t;
  out.precision = 2.0 * X1.transpose() * w.asDiagonal() * X1 / n;
  out.precision = 0.5 * (out.precision + out.precision.transpose()).eval();
  out.n = data.n();
  out.loss_value = logistic_loss(X1, data.y, t);
  out.family = Family::Logistic;
  out.has_intercept = opts.intercept;
  return out;
}

LsaSurrogate fit_gaussian(const Dataset& data, const LsaOptions& opts) {
  const Matrix X1 = design(data, opts.intercept);
  LsaSurrogate out;
  out.beta_tilde = Eigen::CompleteOrthogonalDecomposition<Matrix>(X1).solve(data.y);
  out.precision = 2.0 * X1.transpose() * X1 / static_cast<double>(data.n());
  out.n = data.n();
  out.loss_value = (data.y - X1 * out.beta_tilde).squaredNorm();
  out.family = Family::Gaussian;
  out.has_intercept = opts.intercept;
  return out;
}

QuadraticLoss surrogate_loss(const LsaSurrogate& s) {
  QuadraticLoss loss;
  loss.H = s.precision;
  loss.g = s.precision * s.beta_tilde;
  loss.c0 = s.beta_tilde.dot(loss.g);
  loss.has_intercept = s.has_intercept;
  return loss;
}

Vector model_vector(const LsaSurrogate& s, const FitResult& fit) {
  Vector t(s.beta_tilde.size());
  if (s.has_intercept) {
    t[0] = fit.intercept;
    t.tail(fit.beta.size()) = fit.beta;
  } else {
    t = fit.beta;
  }
  return t;
}

void check_surrogate(const LsaSurrogate& s) {
  const Eigen::Index d = s.beta_tilde.size();
  if (d < (s.has_intercept ? 2 : 1)) throw Error(ErrorKind::Data, "surrogate has no coefficients");
  if (s.precision.rows() != d || s.precision.cols() != d)
    throw Error(ErrorKind::DimensionMismatch, "surrogate precision must be d x d");
  if (!s.beta_tilde.allFinite() || !s.precision.allFinite()) throw Error(ErrorKind::Data, "surrogate has non-finite entries");
  if (s.n < 1) throw Error(ErrorKind::Data, "surrogate n must be >= 1");
}

}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Logistic: return "logistic";
    case Family::External: return "external";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "logistic") return Family::Logistic;
  if (name == "external") return Family::External;
  throw Error(ErrorKind::Usage, "unknown family '" + name + "' (expected gaussian or logistic)");
}

double family_loss(Family family, const Dataset& data, const Vector& t, bool intercept) {
  const Matrix X1 = design(data, intercept);
  if (t.size() != X1.cols()) throw Error(ErrorKind::DimensionMismatch, "family_loss: coefficient length");
  if (family == Family::Logistic) return logistic_loss(X1, data.y, t);
  if (family == Family::Gaussian) return (data.y - X1 * t).squaredNorm();
  throw Error(ErrorKind::Usage, "family_loss: external surrogates have no data loss");
}

Vector family_gradient(Family family, const Dataset& data, const Vector& t, bool intercept) {
  const Matrix X1 = design(data, intercept);
  if (t.size() != X1.cols()) throw Error(ErrorKind::DimensionMismatch, "family_gradient: coefficient length");
  if (family == Family::Logistic) return -2.0 * X1.transpose() * (data.y - logistic_prob(X1, t));
  if (family == Family::Gaussian) return -2.0 * X1.transpose() * (data.y - X1 * t);
  throw Error(ErrorKind::Usage, "family_gradient: external surrogates have no data loss");
}

LsaSurrogate fit_unpenalized(Family family, const Dataset& data, const LsaOptions& opts) {
  data.validate();
  if (opts.max_iter < 1 || !(opts.grad_tol > 0.0) || !(opts.divergence_bound > 0.0))
    throw Error(ErrorKind::Usage, "invalid LSA options");
  if (family == Family::Logistic) return fit_logistic(data, opts);
  if (family == Family::Gaussian) return fit_gaussian(data, opts);
  throw Error(ErrorKind::Usage, "external surrogates are read from a file, not fitted");
}

double lsa_loss(const LsaSurrogate& surrogate, const Vector& t) {
  if (t.size() != surrogate.beta_tilde.size()) throw Error(ErrorKind::DimensionMismatch, "lsa_loss: length");
  const Vector d = t - surrogate.beta_tilde;
  return d.dot(surrogate.precision * d);
}

FitResult fit_lsa_constrained(const LsaSurrogate& surrogate, const ConstraintSet& cs, const FitSpec& spec) {
  check_surrogate(surrogate);
  FitResult fit = fit_quadratic(surrogate_loss(surrogate), cs, spec);
  fit.objective = lsa_loss(surrogate, model_vector(surrogate, fit));
  return fit;
}

double surrogate_deviance(const LsaSurrogate& surrogate, const FitResult& fit) {
  return surrogate.loss_value + 0.5 * static_cast<double>(surrogate.n) * fit.objective;
}

Vector lsa_s_grid(const LsaSurrogate& surrogate, const ConstraintSet& cs, int count, const FitSpec& spec) {
  check_surrogate(surrogate);
  if (count < 2) throw Error(ErrorKind::Usage, "grid count must be >= 2");
  const Eigen::Index d = surrogate.beta_tilde.size();
  const Eigen::Index off = surrogate.has_intercept ? 1 : 0;
  const Eigen::Index p = d - off;
  Vector ref = surrogate.beta_tilde;
  if (cs.A().rows() + cs.E().rows() > 0) {
    ConstraintSet cs_model = cs;
    if (cs.dim() != d) {
      if (cs.dim() != p) throw Error(ErrorKind::DimensionMismatch, "constraint dimension does not match surrogate");
      std::vector<int> map(static_cast<size_t>(p));
      std::iota(map.begin(), map.end(), static_cast<int>(off));
      cs_model = cs.lifted(static_cast<int>(d), map);
    }
    QpProblem proj(Matrix::Identity(d, d), -ref, cs_model.A(), cs_model.a(), cs_model.E(), cs_model.e());
    const QpSolution sol = solve_qp(proj, std::nullopt, spec.qp);
    if (sol.status == QpStatus::Infeasible)
      throw Error(ErrorKind::InfeasibleConstraints, "linear prior constraints are infeasible");
    ref = sol.x;
  }
  const Vector w = spec.weights.value_or(Vector::Ones(p));
  const double smax = w.dot(ref.tail(p).cwiseAbs());
  Vector grid(count);
  for (int i = 0; i < count; ++i) grid[i] = smax * static_cast<double>(i) / static_cast<double>(count - 1);
  grid[count - 1] = smax;
  return grid;
}

TuningCurve tune_lsa(const LsaSurrogate& surrogate, const ConstraintSet& cs, const FitSpec& spec, int grid_count,
                     Criterion criterion) {
  if (criterion == Criterion::CV)
    throw Error(ErrorKind::Usage, "cross-validation needs a per-row loss; use gcv or bic with a surrogate");
  const Vector grid = lsa_s_grid(surrogate, cs, grid_count, spec);
  TuningCurve curve = information_curve(grid, surrogate.n, criterion, [&](double s) {
    FitSpec local = spec;
    local.s = s;
    const FitResult fit = fit_lsa_constrained(surrogate, cs, local);
    return LossAndDf{surrogate_deviance(surrogate, fit), fit.df};
  }, surrogate.family != Family::Gaussian);
  curve.diagnostics.insert(curve.diagnostics.begin(), "criterion evaluated on the surrogate deviance scale");
  return curve;
}

LsaSurrogate parse_surrogate_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("surrogate JSON: ") + e.what());
  }
  try {
    LsaSurrogate s;
    const auto bt = j.at("beta_tilde").get<std::vector<double>>();
    const auto pr = j.at("precision").get<std::vector<std::vector<double>>>();
    const auto d = static_cast<Eigen::Index>(bt.size());
    s.beta_tilde = Eigen::Map<const Vector>(bt.data(), d);
    if (static_cast<Eigen::Index>(pr.size()) != d)
      throw Error(ErrorKind::DimensionMismatch, "surrogate precision must have one row per coefficient");
    s.precision.resize(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      if (static_cast<Eigen::Index>(pr[static_cast<size_t>(r)].size()) != d)
        throw Error(ErrorKind::DimensionMismatch, "surrogate precision must be square");
      for (Eigen::Index c = 0; c < d; ++c) s.precision(r, c) = pr[static_cast<size_t>(r)][static_cast<size_t>(c)];
    }
    s.precision = 0.5 * (s.precision + s.precision.transpose()).eval();
    s.n = j.at("n").get<Eigen::Index>();
    s.loss_value = j.value("loss_value", 0.0);
    s.has_intercept = j.value("intercept", false);
    s.family = parse_family(j.value("family", std::string("external")));
    check_surrogate(s);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("surrogate JSON: ") + e.what());
  }
}

std::string surrogate_to_json(const LsaSurrogate& s) {
  json j;
  j["beta_tilde"] = std::vector<double>(s.beta_tilde.data(), s.beta_tilde.data() + s.beta_tilde.size());
  json rows = json::array();
  for (Eigen::Index r = 0; r < s.precision.rows(); ++r) {
    std::vector<double> row(static_cast<size_t>(s.precision.cols()));
    for (Eigen::Index c = 0; c < s.precision.cols(); ++c) row[static_cast<size_t>(c)] = s.precision(r, c);
    rows.push_back(row);
  }
  j["precision"] = rows;
  j["n"] = s.n;
  j["loss_value"] = s.loss_value;
  j["intercept"] = s.has_intercept;
  j["family"] = to_string(s.family);
  return j.dump(2) + "\n";
}

}  // namespace pclasso
