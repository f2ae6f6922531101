#include "pclasso/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pclasso/error.hpp"

namespace pclasso::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kConstraintSlack = 1e-12;

struct Gram {
  Matrix H;
  Vector g;
  double c0 = 0.0;
};

Gram gram(const Dataset& data, bool intercept) {
  Matrix X = data.X;
  Vector y = data.y;
  if (intercept) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j).array() -= X.col(j).mean();
    y.array() -= y.mean();
  }
  return {X.transpose() * X, X.transpose() * y, y.dot(y)};
}

double negdet_value(const NonlinearConstraint& nl, const Vector& b) {
  return b[nl.k()] * b[nl.k()] - b[nl.i()] * b[nl.j()];
}

struct Scanner {
  const Gram& G;
  const ConstraintSet& cs;
  const Vector& w;
  const GridSpec& grid;
  double s;
  Eigen::Index p;
  double budget_slack;

  Vector beta;
  Vector best_beta;
  double best = kInf;
  long long points = 0;

  // Index range of coordinate j whose |x| fits in the remaining budget.
  std::pair<long long, long long> range(Eigen::Index j, double remaining) const {
    const double h = grid.resolution;
    double lo = grid.lower[j];
    double hi = grid.upper[j];
    if (w[j] > 0.0) {
      const double r = (remaining + budget_slack) / w[j];
      lo = std::max(lo, -r);
      hi = std::min(hi, r);
    }
    if (lo > hi) return {0, -1};
    const auto first = static_cast<long long>(std::ceil((lo - grid.lower[j]) / h - 1e-9));
    const auto last = static_cast<long long>(std::floor((hi - grid.lower[j]) / h + 1e-9));
    return {std::max(first, 0LL), last};
  }

  double coord(Eigen::Index j, long long i) const { return grid.lower[j] + static_cast<double>(i) * grid.resolution; }

  long long count(Eigen::Index j, double remaining) {
    auto [a, b] = range(j, remaining);
    if (j == p - 1) return std::max(0LL, b - a + 1);
    long long total = 0;
    for (long long i = a; i <= b; ++i) {
      total += count(j + 1, remaining - w[j] * std::abs(coord(j, i)));
      if (total > grid.max_points) break;
    }
    return total;
  }

  bool constraints_ok() const {
    for (Eigen::Index r = 0; r < cs.A().rows(); ++r) {
      double v = 0.0;
      for (Eigen::Index c = 0; c < p; ++c) v += cs.A()(r, c) * beta[c];
      if (v > cs.a()[r] + kConstraintSlack) return false;
    }
    for (Eigen::Index r = 0; r < cs.E().rows(); ++r) {
      double v = 0.0;
      for (Eigen::Index c = 0; c < p; ++c) v += cs.E()(r, c) * beta[c];
      if (std::abs(v - cs.e()[r]) > 1e-9) return false;
    }
    for (const auto& nl : cs.nonlinear())
      if (negdet_value(nl, beta) > kConstraintSlack) return false;
    return true;
  }

  void scan(Eigen::Index j, double remaining) {
    auto [a, b] = range(j, remaining);
    for (long long i = a; i <= b; ++i) {
      const double x = coord(j, i);
      beta[j] = x;
      if (j + 1 < p) {
        scan(j + 1, remaining - w[j] * std::abs(x));
        continue;
      }
      ++points;
      if (!constraints_ok()) continue;
      double value = G.c0 - 2.0 * G.g.dot(beta) + beta.dot(G.H * beta);
      if (value < best) {
        best = value;
        best_beta = beta;
      }
    }
    beta[j] = 0.0;
  }
};

}  // namespace

GridSpec GridSpec::box(Eigen::Index p, double half, double resolution) {
  GridSpec g;
  const double edge = std::ceil(half / resolution) * resolution;
  g.lower = Vector::Constant(p, -edge);
  g.upper = Vector::Constant(p, edge);
  g.resolution = resolution;
  return g;
}

double oracle_rss(const Dataset& data, const Vector& beta, bool intercept) {
  double ym = 0.0;
  Vector xm = Vector::Zero(data.p());
  if (intercept) {
    ym = data.y.mean();
    xm = data.X.colwise().mean();
  }
  double rss = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    double r = data.y[i] - ym;
    for (Eigen::Index j = 0; j < data.p(); ++j) r -= (data.X(i, j) - xm[j]) * beta[j];
    rss += r * r;
  }
  return rss;
}

bool oracle_feasible(const ConstraintSet& cs, const Vector& beta, double s, const Vector& weights, double tol) {
  double l1 = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) l1 += weights[j] * std::abs(beta[j]);
  if (l1 > s + tol) return false;
  for (Eigen::Index r = 0; r < cs.A().rows(); ++r)
    if (cs.A().row(r).dot(beta) > cs.a()[r] + tol) return false;
  for (Eigen::Index r = 0; r < cs.E().rows(); ++r)
    if (std::abs(cs.E().row(r).dot(beta) - cs.e()[r]) > tol) return false;
  for (const auto& nl : cs.nonlinear())
    if (negdet_value(nl, beta) > tol) return false;
  return true;
}

OracleFit brute_force_fit(const Dataset& data, const ConstraintSet& cs, double s, const GridSpec& grid,
                          bool intercept, const std::optional<Vector>& weights) {
  const Eigen::Index p = data.p();
  if (p > 4) throw Error(ErrorKind::Usage, "brute-force oracle supports p <= 4");
  if (cs.dim() != p) throw Error(ErrorKind::DimensionMismatch, "oracle constraints must have dimension p");
  if (!(grid.resolution > 0.0)) throw Error(ErrorKind::Usage, "grid resolution must be > 0");
  if (grid.lower.size() != p || grid.upper.size() != p) throw Error(ErrorKind::DimensionMismatch, "grid bounds length");
  const Gram G = gram(data, intercept);
  const Vector w = weights.value_or(Vector::Ones(p));
  Scanner sc{G, cs, w, grid, s, p, 1e-9 * std::max(1.0, s), Vector::Zero(p), Vector(), kInf, 0};
  const long long total = sc.count(0, s);
  if (total > grid.max_points)
    throw Error(ErrorKind::GridTooLarge, "oracle grid has more than " + std::to_string(grid.max_points) + " points");
  sc.scan(0, s);
  if (sc.best_beta.size() == 0) throw Error(ErrorKind::NoFeasiblePoint, "no grid point satisfies the constraints");
  OracleFit out;
  out.beta = sc.best_beta;
  out.objective = oracle_rss(data, out.beta, intercept);
  out.points = sc.points;
  return out;
}

OracleFit face_enumeration_fit(const Dataset& data, const ConstraintSet& cs, double s, bool intercept,
                               const std::optional<Vector>& weights) {
  const Eigen::Index p = data.p();
  if (cs.has_nonlinear()) throw Error(ErrorKind::Usage, "face enumeration needs linear constraints only");
  if (cs.dim() != p) throw Error(ErrorKind::DimensionMismatch, "oracle constraints must have dimension p");
  const Eigen::Index m = cs.A().rows();
  const bool budget = std::isfinite(s);
  const Eigen::Index rows = m + (budget ? 1 : 0);
  if (p > 6 || rows > 12) throw Error(ErrorKind::GridTooLarge, "too many faces to enumerate");
  const Gram G = gram(data, intercept);
  const Vector w = weights.value_or(Vector::Ones(p));

  OracleFit best;
  best.objective = kInf;
  long long patterns = 1;
  for (Eigen::Index j = 0; j < p; ++j) patterns *= 3;
  for (long long code = 0; code < patterns; ++code) {
    // sign of each coordinate: -1, 0 (pinned at zero) or +1
    std::vector<int> sign(static_cast<size_t>(p));
    long long c = code;
    for (Eigen::Index j = 0; j < p; ++j, c /= 3) sign[static_cast<size_t>(j)] = static_cast<int>(c % 3) - 1;
    for (long long mask = 0; mask < (1LL << rows); ++mask) {
      std::vector<Vector> eq_rows;
      std::vector<double> eq_rhs;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (sign[static_cast<size_t>(j)] != 0) continue;
        eq_rows.push_back(Vector::Unit(p, j));
        eq_rhs.push_back(0.0);
      }
      for (Eigen::Index r = 0; r < cs.E().rows(); ++r) {
        eq_rows.push_back(cs.E().row(r).transpose());
        eq_rhs.push_back(cs.e()[r]);
      }
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (!(mask >> r & 1)) continue;
        if (r < m) {
          eq_rows.push_back(cs.A().row(r).transpose());
          eq_rhs.push_back(cs.a()[r]);
        } else {
          Vector b(p);
          for (Eigen::Index j = 0; j < p; ++j) b[j] = w[j] * sign[static_cast<size_t>(j)];
          eq_rows.push_back(b);
          eq_rhs.push_back(s);
        }
      }
      const auto k = static_cast<Eigen::Index>(eq_rows.size());
      Matrix K = Matrix::Zero(p + k, p + k);
      Vector rhs = Vector::Zero(p + k);
      K.topLeftCorner(p, p) = 2.0 * G.H;
      rhs.head(p) = 2.0 * G.g;
      for (Eigen::Index r = 0; r < k; ++r) {
        K.block(0, p + r, p, 1) = eq_rows[static_cast<size_t>(r)];
        K.block(p + r, 0, 1, p) = eq_rows[static_cast<size_t>(r)].transpose();
        rhs[p + r] = eq_rhs[static_cast<size_t>(r)];
      }
      const Vector sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(K).solve(rhs);
      if ((K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-9 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) continue;
      const Vector beta = sol.head(p);
      bool signs_ok = true;
      for (Eigen::Index j = 0; j < p; ++j)
        if (beta[j] * sign[static_cast<size_t>(j)] < -1e-12) signs_ok = false;
      if (!signs_ok || !oracle_feasible(cs, beta, s, w, 1e-9)) continue;
      ++best.points;
      const double obj = oracle_rss(data, beta, intercept);
      if (obj < best.objective) {
        best.objective = obj;
        best.beta = beta;
      }
    }
  }
  if (!std::isfinite(best.objective)) throw Error(ErrorKind::NoFeasiblePoint, "no feasible face");
  return best;
}

OracleFit polish(const Dataset& data, const ConstraintSet& cs, double s, const OracleFit& start, double resolution,
                 bool intercept, const std::optional<Vector>& weights, double final_resolution) {
  if (!cs.has_nonlinear()) {
    OracleFit exact = face_enumeration_fit(data, cs, s, intercept, weights);
    if (exact.objective <= start.objective) return exact;
  }
  OracleFit cur = start;
  for (double h = resolution / 10.0; h >= final_resolution * 0.999; h /= 10.0) {
    for (int rep = 0; rep < 200; ++rep) {
      GridSpec local;
      local.resolution = h;
      local.lower = cur.beta.array() - 10.0 * h;
      local.upper = cur.beta.array() + 10.0 * h;
      OracleFit next;
      try {
        next = brute_force_fit(data, cs, s, local, intercept, weights);
      } catch (const Error&) {
        break;
      }
      if (!(next.objective < cur.objective)) break;
      const bool moved = (next.beta - cur.beta).lpNorm<Eigen::Infinity>() > 0.5 * h;
      cur = next;
      if (!moved) break;
    }
  }
  return cur;
}

Vector naive_loo_cv(const Dataset& data, const Vector& grid, const FitFn& fit_fn) {
  const Eigen::Index n = data.n();
  if (n > 200) throw Error(ErrorKind::Usage, "naive LOO oracle is limited to n <= 200");
  Vector pe = Vector::Zero(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Dataset train;
      train.column_names = data.column_names;
      train.X.resize(n - 1, data.p());
      train.y.resize(n - 1);
      Eigen::Index r = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == j) continue;
        train.X.row(r) = data.X.row(i);
        train.y[r] = data.y[i];
        ++r;
      }
      auto [b0, beta] = fit_fn(train, grid[k]);
      double pred = b0;
      for (Eigen::Index c = 0; c < data.p(); ++c) pred += data.X(j, c) * beta[c];
      pe[k] += (data.y[j] - pred) * (data.y[j] - pred);
    }
  }
  return pe;
}

Vector newton_logistic(const Matrix& X, const Vector& y, bool intercept, double tol, int max_iter) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols() + (intercept ? 1 : 0);
  auto row = [&](Eigen::Index i) {
    Vector r(d);
    if (intercept) {
      r[0] = 1.0;
      r.tail(X.cols()) = X.row(i).transpose();
    } else {
      r = X.row(i).transpose();
    }
    return r;
  };
  Vector b = Vector::Zero(d);
  for (int it = 0; it < max_iter; ++it) {
    Vector score = Vector::Zero(d);
    Matrix info = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector xi = row(i);
      const double pi = 1.0 / (1.0 + std::exp(-xi.dot(b)));
      score += (y[i] - pi) * xi;
      info += pi * (1.0 - pi) * xi * xi.transpose();
    }
    if (score.lpNorm<Eigen::Infinity>() <= tol) return b;
    const Vector step = info.partialPivLu().solve(score);
    b += step;
    if (step.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + b.lpNorm<Eigen::Infinity>())) return b;
  }
  throw Error(ErrorKind::NonConvergence, "Newton oracle did not converge");
}

Vector soft_threshold_budget(const Vector& z, double s, const std::vector<char>& nonneg) {
  Vector a(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) a[j] = nonneg[static_cast<size_t>(j)] ? std::max(z[j], 0.0) : z[j];
  if (a.cwiseAbs().sum() <= s) return a;
  // Find theta with sum max(|a_j| - theta, 0) = s from the sorted magnitudes.
  std::vector<double> m(static_cast<size_t>(a.size()));
  for (Eigen::Index j = 0; j < a.size(); ++j) m[static_cast<size_t>(j)] = std::abs(a[j]);
  std::sort(m.begin(), m.end(), std::greater<>());
  double theta = 0.0;
  double cum = 0.0;
  for (size_t k = 0; k < m.size(); ++k) {
    cum += m[k];
    const double t = (cum - s) / static_cast<double>(k + 1);
    const double next = k + 1 < m.size() ? m[k + 1] : 0.0;
    if (t >= next) {
      theta = t;
      break;
    }
  }
  Vector out(a.size());
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double mag = std::max(std::abs(a[j]) - theta, 0.0);
    out[j] = a[j] < 0.0 ? -mag : mag;
  }
  return out;
}

int counted_df(const Vector& beta, const ConstraintSet& cs, double tol) {
  int df = static_cast<int>(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] == 0.0) --df;
  for (Eigen::Index r = 0; r < cs.A().rows(); ++r)
    if (std::abs(cs.A().row(r).dot(beta) - cs.a()[r]) <= tol) --df;
  df -= static_cast<int>(cs.E().rows());
  for (const auto& nl : cs.nonlinear())
    if (std::abs(negdet_value(nl, beta)) <= tol) --df;
  return std::max(df, 0);
}

}  // namespace pclasso::oracle
