#include "pclasso/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pclasso/error.hpp"

namespace pclasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::DimensionMismatch, "QpProblem: " + what);
}

// Working data of one active-set run. Rows are the general inequalities G x <= h;
// simple bounds x_i >= lb_i are kept apart so that fixed variables drop out of the
// KKT system.
struct ActiveSetInput {
  const Matrix& Q;
  const Vector& c;
  const Matrix& G;
  const Vector& h;
  const Matrix& E;
  const Vector& e;
  const Vector& lb;
  double jitter;
  double kkt_tol;
  int max_iter;
};

struct ActiveSetResult {
  Vector x;
  std::vector<int> rows;     // working-set general rows
  std::vector<char> fixed;   // coordinates on their bound
  Vector mult_rows;          // aligned with `rows`
  Vector mult_eq;
  Vector mult_bound;         // full length d
  int iterations = 0;
  QpStatus status = QpStatus::IterationLimit;
};

// Solves the equality-constrained subproblem on the free coordinates:
//   [Q_FF + jI  W'] [p]   [rhs]
//   [W          0 ] [v] = [ 0 ]
// followed by two refinement steps against the un-jittered matrix.
Vector solve_kkt(const ActiveSetInput& in, const std::vector<int>& free_idx,
                 const std::vector<int>& rows, const Vector& rhs_free) {
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  const auto nq = in.E.rows();
  const auto nw = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index n = nf + nq + nw;
  Matrix K = Matrix::Zero(n, n);
  for (Eigen::Index a = 0; a < nf; ++a) {
    for (Eigen::Index b = 0; b < nf; ++b) K(a, b) = in.Q(free_idx[a], free_idx[b]);
  }
  for (Eigen::Index r = 0; r < nq; ++r) {
    for (Eigen::Index a = 0; a < nf; ++a) {
      K(nf + r, a) = in.E(r, free_idx[a]);
      K(a, nf + r) = in.E(r, free_idx[a]);
    }
  }
  for (Eigen::Index r = 0; r < nw; ++r) {
    for (Eigen::Index a = 0; a < nf; ++a) {
      K(nf + nq + r, a) = in.G(rows[r], free_idx[a]);
      K(a, nf + nq + r) = in.G(rows[r], free_idx[a]);
    }
  }
  Vector rhs = Vector::Zero(n);
  rhs.head(nf) = rhs_free;

  Matrix Kj = K;
  for (Eigen::Index a = 0; a < nf; ++a) Kj(a, a) += in.jitter;
  Eigen::PartialPivLU<Matrix> lu(Kj);
  Vector sol = lu.solve(rhs);
  if (!sol.allFinite()) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Kj);
    sol = cod.solve(rhs);
  }
  if (in.jitter > 0.0) {
    for (int step = 0; step < 2; ++step) {
      Vector refined = sol + lu.solve(rhs - K * sol);
      if (!refined.allFinite()) break;
      sol = refined;
    }
  }
  return sol;
}

ActiveSetResult run_active_set(const ActiveSetInput& in, Vector x) {
  const Eigen::Index d = x.size();
  const Eigen::Index m = in.G.rows();
  const Eigen::Index nq = in.E.rows();

  ActiveSetResult out;
  out.fixed.assign(static_cast<size_t>(d), 0);
  std::vector<char> in_ws(static_cast<size_t>(m), 0);
  std::vector<int>& rows = out.rows;

  const double dual_tol = 1e-2 * in.kkt_tol * std::max(1.0, in.c.lpNorm<Eigen::Infinity>());
  Vector row_scale(m);
  for (Eigen::Index i = 0; i < m; ++i) row_scale[i] = std::max(in.G.row(i).lpNorm<Eigen::Infinity>(), 1e-300);

  bool at_min = false;
  for (int iter = 0; iter < in.max_iter; ++iter) {
    out.iterations = iter + 1;
    std::vector<int> free_idx;
    free_idx.reserve(static_cast<size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!out.fixed[i]) free_idx.push_back(static_cast<int>(i));
    }
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    const Vector g = in.Q * x + in.c;
    Vector g_free(nf);
    for (Eigen::Index a = 0; a < nf; ++a) g_free[a] = g[free_idx[a]];

    Vector sol = solve_kkt(in, free_idx, rows, -g_free);
    Vector p = Vector::Zero(d);
    for (Eigen::Index a = 0; a < nf; ++a) p[free_idx[a]] = sol[a];
    const double pnorm = p.lpNorm<Eigen::Infinity>();
    if (!at_min && pnorm <= 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>())) at_min = true;

    if (at_min) {
      // Multipliers of the current working set; p is zero up to rounding here.
      Vector nu_eq = sol.segment(nf, nq);
      Vector mu_rows = sol.segment(nf + nq, static_cast<Eigen::Index>(rows.size()));
      Vector lin = g;
      if (nq > 0) lin += in.E.transpose() * nu_eq;
      for (size_t r = 0; r < rows.size(); ++r) lin += mu_rows[r] * in.G.row(rows[r]).transpose();
      Vector mu_bound = Vector::Zero(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        if (out.fixed[i]) mu_bound[i] = lin[i];
      }

      // Most negative multiplier leaves; lowest unified index (rows, then bounds) on ties.
      double worst = -dual_tol;
      long leave = -1;
      for (size_t r = 0; r < rows.size(); ++r) {
        const long key = rows[r];
        if (mu_rows[r] < worst || (mu_rows[r] == worst && leave >= 0 && key < leave)) {
          worst = mu_rows[r];
          leave = key;
        }
      }
      for (Eigen::Index i = 0; i < d; ++i) {
        if (!out.fixed[i]) continue;
        const long key = m + i;
        if (mu_bound[i] < worst || (mu_bound[i] == worst && leave >= 0 && key < leave)) {
          worst = mu_bound[i];
          leave = key;
        }
      }
      if (leave < 0) {
        out.x = x;
        out.mult_rows = mu_rows;
        out.mult_eq = nu_eq;
        out.mult_bound = mu_bound;
        out.status = QpStatus::Optimal;
        return out;
      }
      if (leave < m) {
        auto it = std::find(rows.begin(), rows.end(), static_cast<int>(leave));
        rows.erase(it);
        in_ws[leave] = 0;
      } else {
        out.fixed[leave - m] = 0;
      }
      at_min = false;
      continue;
    }

    // Ratio test: smallest step to a blocking constraint, lowest index on ties.
    double alpha = 1.0;
    long block = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_ws[i]) continue;
      const double ap = in.G.row(i).dot(p);
      if (ap <= 1e-12 * row_scale[i] * pnorm) continue;
      const double r = std::max(0.0, (in.h[i] - in.G.row(i).dot(x)) / ap);
      if (r < alpha) {
        alpha = r;
        block = i;
      }
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      if (out.fixed[i] || !std::isfinite(in.lb[i])) continue;
      if (p[i] >= -1e-12 * pnorm) continue;
      const double r = std::max(0.0, (x[i] - in.lb[i]) / -p[i]);
      if (r < alpha) {
        alpha = r;
        block = m + i;
      }
    }

    if (block < 0 && in.jitter > 0.0 && pnorm > 1e8 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      out.x = x;
      out.status = QpStatus::Unbounded;
      return out;
    }

    x += alpha * p;
    if (block < 0) {
      at_min = true;
    } else if (block < m) {
      rows.push_back(static_cast<int>(block));
      in_ws[block] = 1;
    } else {
      out.fixed[block - m] = 1;
      x[block - m] = in.lb[block - m];
    }
  }
  out.x = x;
  out.status = QpStatus::IterationLimit;
  return out;
}

double max_violation(const Matrix& G, const Vector& h, const Matrix& E, const Vector& e,
                     const Vector& lb, const Vector& x) {
  double v = 0.0;
  if (G.rows() > 0) v = std::max(v, (G * x - h).maxCoeff());
  if (E.rows() > 0) v = std::max(v, (E * x - e).cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::isfinite(lb[i])) v = std::max(v, lb[i] - x[i]);
  }
  return v;
}

// Minimizes t + rho/2 |x - anchor|^2 over {G x - t <= h, lb - x - t <= 0, E x = e, t >= 0},
// re-anchoring until the violation t vanishes or stops decreasing.
std::optional<Vector> phase_one(const Matrix& G, const Vector& h, const Matrix& E, const Vector& e,
                                const Vector& lb, Vector anchor, const QpOptions& opts,
                                int max_iter, int& iterations) {
  const Eigen::Index d = anchor.size();
  std::vector<Eigen::Index> bounded;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::isfinite(lb[i])) bounded.push_back(i);
  }
  const Eigen::Index m = G.rows();
  const auto nb = static_cast<Eigen::Index>(bounded.size());
  Matrix G1 = Matrix::Zero(m + nb, d + 1);
  Vector h1(m + nb);
  G1.topLeftCorner(m, d) = G;
  G1.block(0, d, m, 1).setConstant(-1.0);
  h1.head(m) = h;
  for (Eigen::Index k = 0; k < nb; ++k) {
    G1(m + k, bounded[k]) = -1.0;
    G1(m + k, d) = -1.0;
    h1[m + k] = -lb[bounded[k]];
  }
  Matrix E1 = Matrix::Zero(E.rows(), d + 1);
  E1.leftCols(d) = E;
  Vector lb1 = Vector::Constant(d + 1, -kInf);
  lb1[d] = 0.0;

  const double rho = 1e-6;
  Matrix Q1 = Matrix::Zero(d + 1, d + 1);
  Q1.topLeftCorner(d, d).diagonal().setConstant(rho);
  const double jitter = opts.jitter_scale * Q1.trace() / static_cast<double>(d + 1);

  double t_prev = kInf;
  for (int round = 0; round < 100; ++round) {
    Vector y(d + 1);
    y.head(d) = anchor;
    double t0 = 0.0;
    if (m + nb > 0) t0 = std::max(0.0, (G1.leftCols(d) * anchor - h1).maxCoeff());
    y[d] = t0;
    Vector c1(d + 1);
    c1.head(d) = -rho * anchor;
    c1[d] = 1.0;
    ActiveSetInput in{Q1, c1, G1, h1, E1, e, lb1, jitter, opts.kkt_tol, max_iter};
    ActiveSetResult res = run_active_set(in, y);
    iterations += res.iterations;
    const double t = std::max(0.0, res.x[d]);
    anchor = res.x.head(d);
    if (max_violation(G, h, E, e, lb, anchor) <= opts.feasibility_tol) return anchor;
    if (res.status != QpStatus::Optimal) return std::nullopt;
    if (t >= t_prev * (1.0 - 1e-6)) return std::nullopt;
    t_prev = t;
  }
  return std::nullopt;
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::Infeasible: return "Infeasible";
    case QpStatus::IterationLimit: return "IterationLimit";
    case QpStatus::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

QpProblem::QpProblem(Matrix Q, Vector c) : QpProblem(std::move(Q), std::move(c), Matrix(), Vector()) {}

QpProblem::QpProblem(Matrix Q, Vector c, Matrix A_ineq, Vector b_ineq)
    : QpProblem(std::move(Q), std::move(c), std::move(A_ineq), std::move(b_ineq), Matrix(), Vector()) {}

QpProblem::QpProblem(Matrix Q, Vector c, Matrix A_ineq, Vector b_ineq, Matrix A_eq, Vector b_eq,
                     std::optional<Vector> lower_bounds)
    : Q_(std::move(Q)),
      c_(std::move(c)),
      A_ineq_(std::move(A_ineq)),
      b_ineq_(std::move(b_ineq)),
      A_eq_(std::move(A_eq)),
      b_eq_(std::move(b_eq)),
      lower_bounds_(std::move(lower_bounds)) {
  const Eigen::Index d = c_.size();
  require(Q_.rows() == d && Q_.cols() == d, "Q must be d x d");
  require(A_ineq_.cols() == d || A_ineq_.rows() == 0, "A_ineq must have d columns");
  require(A_ineq_.rows() == b_ineq_.size(), "A_ineq rows must match b_ineq");
  require(A_eq_.cols() == d || A_eq_.rows() == 0, "A_eq must have d columns");
  require(A_eq_.rows() == b_eq_.size(), "A_eq rows must match b_eq");
  if (A_ineq_.rows() == 0) A_ineq_.resize(0, d);
  if (A_eq_.rows() == 0) A_eq_.resize(0, d);
  if (lower_bounds_) require(lower_bounds_->size() == d, "lower_bounds must have length d");
  require(Q_.allFinite() && c_.allFinite() && A_ineq_.allFinite() && A_eq_.allFinite() &&
              b_eq_.allFinite(),
          "non-finite entries");
  Q_ = 0.5 * (Q_ + Q_.transpose()).eval();
}

double KktResiduals::max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

QpSolution solve_qp(const QpProblem& problem, const std::optional<Vector>& x0, const QpOptions& opts) {
  const Eigen::Index d = problem.dim();
  const Eigen::Index m = problem.num_ineq();
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(50 * (d + m + 1));
  const Vector lb = problem.lower_bounds().value_or(Vector::Constant(d, -kInf));

  QpSolution out;
  out.mult_ineq = Vector::Zero(m);
  out.mult_eq = Vector::Zero(problem.num_eq());
  out.mult_bound = Vector::Zero(d);
  out.x = Vector::Zero(d);

  // Rows with b = +inf never bind.
  std::vector<int> kept;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (problem.b_ineq()[i] != kInf) kept.push_back(static_cast<int>(i));
  }
  Matrix G(static_cast<Eigen::Index>(kept.size()), d);
  Vector h(static_cast<Eigen::Index>(kept.size()));
  for (size_t k = 0; k < kept.size(); ++k) {
    G.row(static_cast<Eigen::Index>(k)) = problem.A_ineq().row(kept[k]);
    h[static_cast<Eigen::Index>(k)] = problem.b_ineq()[kept[k]];
  }

  // Linearly independent subset of the equality rows, in ascending order.
  std::vector<int> eq_rows;
  if (problem.num_eq() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(problem.A_eq().transpose());
    qr.setThreshold(1e-12);
    const auto rank = qr.rank();
    for (Eigen::Index k = 0; k < rank; ++k) eq_rows.push_back(qr.colsPermutation().indices()[k]);
    std::sort(eq_rows.begin(), eq_rows.end());
  }
  Matrix E(static_cast<Eigen::Index>(eq_rows.size()), d);
  Vector e(static_cast<Eigen::Index>(eq_rows.size()));
  for (size_t k = 0; k < eq_rows.size(); ++k) {
    E.row(static_cast<Eigen::Index>(k)) = problem.A_eq().row(eq_rows[k]);
    e[static_cast<Eigen::Index>(k)] = problem.b_eq()[eq_rows[k]];
  }

  // Ridge only when Q is not numerically positive definite.
  double jitter = 0.0;
  {
    Eigen::LLT<Matrix> llt(problem.Q());
    bool pd = llt.info() == Eigen::Success;
    if (pd && d > 0) {
      const Vector diag = Matrix(llt.matrixL()).diagonal();
      pd = diag.minCoeff() * diag.minCoeff() > 1e-12 * std::max(problem.Q().diagonal().maxCoeff(), 1e-300);
    }
    if (!pd) {
      const double tr = problem.Q().trace();
      jitter = opts.jitter_scale * (tr > 0.0 ? tr / static_cast<double>(d) : 1.0);
    }
  }
  out.jitter = jitter;

  int iterations = 0;
  Vector start;
  const auto feasible = [&](const Vector& x) {
    if (max_violation(G, h, E, e, lb, x) > opts.feasibility_tol) return false;
    if (problem.num_eq() > 0 &&
        (problem.A_eq() * x - problem.b_eq()).cwiseAbs().maxCoeff() > opts.feasibility_tol)
      return false;
    return true;
  };
  if (x0 && x0->size() == d && feasible(*x0)) {
    start = *x0;
  } else {
    Vector xe = Vector::Zero(d);
    if (E.rows() > 0) xe = Eigen::CompleteOrthogonalDecomposition<Matrix>(E).solve(e);
    if (feasible(xe)) {
      start = xe;
    } else {
      auto found = phase_one(G, h, E, e, lb, xe, opts, max_iter, iterations);
      if (!found || !feasible(*found)) {
        out.status = QpStatus::Infeasible;
        out.iterations = iterations;
        if (found) out.x = *found;
        return out;
      }
      start = *found;
    }
  }

  ActiveSetInput in{problem.Q(), problem.c(), G, h, E, e, lb, jitter, opts.kkt_tol, max_iter};
  ActiveSetResult res = run_active_set(in, start);
  out.iterations = iterations + res.iterations;
  out.status = res.status;
  out.x = res.x;
  out.objective = problem.objective(out.x);
  if (res.status == QpStatus::Optimal) {
    for (size_t r = 0; r < res.rows.size(); ++r) {
      out.mult_ineq[kept[res.rows[r]]] = res.mult_rows[static_cast<Eigen::Index>(r)];
      out.active_set.push_back(kept[res.rows[r]]);
    }
    std::sort(out.active_set.begin(), out.active_set.end());
    for (size_t k = 0; k < eq_rows.size(); ++k) out.mult_eq[eq_rows[k]] = res.mult_eq[static_cast<Eigen::Index>(k)];
    for (Eigen::Index i = 0; i < d; ++i) {
      if (res.fixed[i]) {
        out.mult_bound[i] = res.mult_bound[i];
        out.active_bounds.push_back(static_cast<int>(i));
      }
    }
  }
  return out;
}

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& solution) {
  const Vector& x = solution.x;
  const Eigen::Index d = problem.dim();
  KktResiduals r;
  Vector grad = problem.Q() * x + problem.c();
  if (problem.num_ineq() > 0) grad += problem.A_ineq().transpose() * solution.mult_ineq;
  if (problem.num_eq() > 0) grad += problem.A_eq().transpose() * solution.mult_eq;
  if (problem.lower_bounds()) grad -= solution.mult_bound;
  r.stationarity = d > 0 ? grad.lpNorm<Eigen::Infinity>() : 0.0;

  for (Eigen::Index i = 0; i < problem.num_ineq(); ++i) {
    const double slack = problem.A_ineq().row(i).dot(x) - problem.b_ineq()[i];
    if (std::isfinite(slack)) {
      r.primal = std::max(r.primal, slack);
      r.complementarity = std::max(r.complementarity, std::abs(solution.mult_ineq[i] * slack));
    }
    r.dual = std::max(r.dual, -solution.mult_ineq[i]);
  }
  for (Eigen::Index i = 0; i < problem.num_eq(); ++i) {
    r.primal = std::max(r.primal, std::abs(problem.A_eq().row(i).dot(x) - problem.b_eq()[i]));
  }
  if (problem.lower_bounds()) {
    const Vector& lb = *problem.lower_bounds();
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!std::isfinite(lb[i])) continue;
      r.primal = std::max(r.primal, lb[i] - x[i]);
      r.dual = std::max(r.dual, -solution.mult_bound[i]);
      r.complementarity = std::max(r.complementarity, std::abs(solution.mult_bound[i] * (x[i] - lb[i])));
    }
  }
  return r;
}

}  // namespace pclasso
