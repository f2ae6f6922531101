#include "pclasso/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pclasso/error.hpp"
#include "pclasso/inference.hpp"

namespace pclasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Model coordinates t: optional intercept at index 0, then the p coefficients.
struct Layout {
  Eigen::Index d = 0;
  Eigen::Index offset = 0;
  Vector weights;  // zero on the intercept

  Vector beta(const Vector& t) const { return t.tail(d - offset); }
  double intercept(const Vector& t) const { return offset ? t[0] : 0.0; }
};

enum class Mode { Budget, Penalty };

struct Subproblem {
  const Matrix& H;
  const Vector& g;
  const Layout& layout;
  const ConstraintSet& cs;  // over t
  const Vector& dinv;       // t = dinv .* gamma
  Mode mode;
  double s = kInf;
  Vector penalty;           // per t coordinate, Penalty mode
  Vector linear_cost;       // extra cost'(t), Penalty mode
  const Matrix* cuts = nullptr;
  const Vector* cut_rhs = nullptr;
  std::vector<int> fixed_zero;
  std::optional<Vector> start;
  QpOptions qp;
};

struct SubproblemResult {
  Vector t;
  QpSolution sol;
  double budget_multiplier = 0.0;
  Vector linear_multipliers;  // per row of cs.A()
  Vector cut_multipliers;     // per cut row
  Vector eq_multipliers;      // per row of cs.E()
};

SubproblemResult solve_subproblem(const Subproblem& sp) {
  const Eigen::Index d = sp.layout.d;
  // z layout: one slot per unpenalized coordinate, a (+, -) pair per coefficient.
  std::vector<Eigen::Index> pos(static_cast<size_t>(d)), neg(static_cast<size_t>(d), -1);
  Eigen::Index nz = 0;
  for (Eigen::Index j = 0; j < d; ++j) pos[j] = nz++;
  for (Eigen::Index j = sp.layout.offset; j < d; ++j) neg[j] = nz++;
  Matrix T = Matrix::Zero(d, nz);  // t = dinv .* (T z)
  for (Eigen::Index j = 0; j < d; ++j) {
    T(j, pos[j]) = sp.dinv[j];
    if (neg[j] >= 0) T(j, neg[j]) = -sp.dinv[j];
  }

  Matrix Q = 2.0 * T.transpose() * sp.H * T;
  Vector c = -2.0 * T.transpose() * sp.g;
  if (sp.mode == Mode::Penalty) {
    c += T.transpose() * sp.linear_cost;
    for (Eigen::Index j = sp.layout.offset; j < d; ++j) {
      c[pos[j]] += sp.penalty[j] * sp.dinv[j];
      c[neg[j]] += sp.penalty[j] * sp.dinv[j];
    }
  }

  const Eigen::Index ni = sp.mode == Mode::Budget ? sp.cs.A().rows() : 0;
  const Eigen::Index nc = sp.cuts ? sp.cuts->rows() : 0;
  const bool budget = sp.mode == Mode::Budget && std::isfinite(sp.s);
  const Eigen::Index m = ni + nc + (budget ? 1 : 0);
  Matrix A(m, nz);
  Vector b(m);
  if (ni > 0) {
    A.topRows(ni) = sp.cs.A() * T;
    b.head(ni) = sp.cs.a();
  }
  if (nc > 0) {
    A.middleRows(ni, nc) = *sp.cuts * T;
    b.segment(ni, nc) = *sp.cut_rhs;
  }
  if (budget) {
    A.row(m - 1).setZero();
    for (Eigen::Index j = sp.layout.offset; j < d; ++j) {
      A(m - 1, pos[j]) = sp.layout.weights[j] * sp.dinv[j];
      A(m - 1, neg[j]) = sp.layout.weights[j] * sp.dinv[j];
    }
    b[m - 1] = sp.s;
  }

  const Eigen::Index ne = sp.mode == Mode::Budget ? sp.cs.E().rows() : 0;
  const auto nfix = static_cast<Eigen::Index>(sp.fixed_zero.size());
  Matrix E(ne + nfix, nz);
  Vector e = Vector::Zero(ne + nfix);
  if (ne > 0) {
    E.topRows(ne) = sp.cs.E() * T;
    e.head(ne) = sp.cs.e();
  }
  for (Eigen::Index k = 0; k < nfix; ++k) E.row(ne + k) = T.row(sp.fixed_zero[static_cast<size_t>(k)]);

  Vector lb = Vector::Zero(nz);
  for (Eigen::Index j = 0; j < sp.layout.offset; ++j) lb[pos[j]] = -kInf;

  std::optional<Vector> x0;
  if (sp.start) {
    Vector z = Vector::Zero(nz);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double gamma = (*sp.start)[j] / sp.dinv[j];
      if (neg[j] < 0) {
        z[pos[j]] = gamma;
      } else {
        z[pos[j]] = std::max(gamma, 0.0);
        z[neg[j]] = std::max(-gamma, 0.0);
      }
    }
    x0 = z;
  }

  QpProblem qp(std::move(Q), std::move(c), std::move(A), std::move(b), std::move(E), std::move(e), std::move(lb));
  SubproblemResult out;
  out.sol = solve_qp(qp, x0, sp.qp);
  if (out.sol.status == QpStatus::Infeasible) {
    throw Error(ErrorKind::InfeasibleConstraints,
                "prior constraints are infeasible (or exclude the L1 ball entirely)");
  }
  if (out.sol.status != QpStatus::Optimal) {
    throw Error(ErrorKind::SolverFailure, std::string("quadratic program failed: ") + to_string(out.sol.status));
  }
  out.t = T * out.sol.x;
  if (budget) out.budget_multiplier = out.sol.mult_ineq[m - 1];
  out.linear_multipliers = out.sol.mult_ineq.head(ni);
  out.cut_multipliers = out.sol.mult_ineq.segment(ni, nc);
  out.eq_multipliers = out.sol.mult_eq.head(ne);
  return out;
}

bool nonlinear_feasible(const ConstraintSet& cs, const Vector& t, double tol) {
  return std::all_of(cs.nonlinear().begin(), cs.nonlinear().end(),
                     [&](const NonlinearConstraint& nl) { return nl.value(t) <= tol; });
}

// Accumulated outer cuts; owner[r] is the nonlinear constraint row r linearizes.
struct Cuts {
  Matrix J;
  Vector rhs;
  std::vector<int> owner;
};

Vector stacked_multipliers(const ConstraintSet& cs, const SubproblemResult& r, const Vector& t, const Cuts* cuts) {
  Vector out = Vector::Zero(cs.count());
  const Eigen::Index ni = cs.A().rows();
  const Eigen::Index ne = cs.E().rows();
  if (r.linear_multipliers.size() == ni) out.head(ni) = r.linear_multipliers;
  for (Eigen::Index k = 0; k < r.eq_multipliers.size(); ++k) {
    const double nu = r.eq_multipliers[k];
    if (nu >= 0.0) out[ni + k] = nu;
    else out[ni + ne + k] = -nu;
  }
  if (!cuts) return out;
  for (Eigen::Index c = 0; c < r.cut_multipliers.size(); ++c) {
    const int k = cuts->owner[static_cast<size_t>(c)];
    const auto& nl = cs.nonlinear()[static_cast<size_t>(k)];
    const Vector gg = nl.gradient(t);
    const double denom = gg.squaredNorm();
    if (r.cut_multipliers[c] == 0.0 || denom == 0.0) continue;
    out[ni + 2 * ne + k] += r.cut_multipliers[c] * cuts->J.row(c).dot(gg) / denom;
  }
  return out;
}

Layout make_layout(const QuadraticLoss& loss, const FitSpec& spec) {
  Layout layout;
  layout.d = loss.g.size();
  layout.offset = loss.has_intercept ? 1 : 0;
  const Eigen::Index p = layout.d - layout.offset;
  if (p < 1) throw Error(ErrorKind::Data, "model has no coefficients");
  spec.validate(p);
  layout.weights = Vector::Zero(layout.d);
  layout.weights.tail(p) = spec.weights.value_or(Vector::Ones(p));
  return layout;
}

ConstraintSet constraints_over_model(const ConstraintSet& cs, const Layout& layout) {
  if (cs.dim() == layout.d) return cs;
  const Eigen::Index p = layout.d - layout.offset;
  if (cs.dim() == p && layout.offset == 1) {
    std::vector<int> map(static_cast<size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) map[j] = static_cast<int>(j + 1);
    return cs.lifted(static_cast<int>(layout.d), map);
  }
  if (cs.dim() == 0 && cs.empty()) return ConstraintSet(static_cast<int>(layout.d));
  throw Error(ErrorKind::DimensionMismatch, "constraint dimension " + std::to_string(cs.dim()) +
                                                " does not match model dimension " + std::to_string(p));
}

Vector starting_point(const QuadraticLoss& loss, const Layout& layout, const ConstraintSet& cs,
                      const FitSpec& spec, SolverInfo& info) {
  const Eigen::Index d = layout.d;
  Matrix H = loss.H;
  Eigen::LDLT<Matrix> ldlt(H);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
    H.diagonal().array() += 1e-10 * std::max(H.trace(), 1e-300) / static_cast<double>(d);
    ldlt.compute(H);
  }
  const Vector mu = ldlt.solve(loss.g);
  const Matrix sigma = ldlt.solve(Matrix::Identity(d, d));
  McConfig cfg(mu, sigma, spec.mc_draws, spec.mc_seed);
  cfg.set_weights(layout.weights);
  if (auto z = mc_initial_point(cfg, spec.s, cs, spec.feasibility_tol)) {
    info.used_mc_start = true;
    return *z;
  }
  info.warnings.push_back("Monte Carlo start found no feasible draw; using projection of OLS onto linear constraints");
  QpProblem proj(Matrix::Identity(d, d), -mu, cs.A(), cs.a(), cs.E(), cs.e());
  auto sol = solve_qp(proj, std::nullopt, spec.qp);
  if (sol.status == QpStatus::Infeasible)
    throw Error(ErrorKind::InfeasibleConstraints, "linear prior constraints are infeasible");
  return sol.x;
}

FitResult finish(const Vector& t, const Layout& layout, const ConstraintSet& cs_model, const QuadraticLoss& loss,
                 const ConstraintSet& cs_user, const FitSpec& spec, SolverInfo info,
                 const std::vector<int>& zero_set) {
  FitResult fit;
  fit.beta = layout.beta(t);
  fit.intercept = layout.intercept(t);
  fit.zero_set = zero_set;
  fit.l1_norm = layout.weights.tail(fit.beta.size()).dot(fit.beta.cwiseAbs());
  fit.objective = loss.value(t);
  if (cs_model.count() > 0) {
    const Vector v = evaluate(cs_model, t);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (std::abs(v[k]) <= spec.feasibility_tol) fit.active_constraints.push_back(static_cast<int>(k));
    }
  }
  fit.solver_info = std::move(info);
  fit.df = degrees_of_freedom(fit, cs_user, spec.feasibility_tol);
  return fit;
}

struct Engine {
  const QuadraticLoss& loss;
  const ConstraintSet& cs_user;
  const FitSpec& spec;
  Layout layout;
  ConstraintSet cs;
  Vector dinv;

  Engine(const QuadraticLoss& l, const ConstraintSet& c, const FitSpec& s, SolverInfo& info)
      : loss(l), cs_user(c), spec(s), layout(make_layout(l, s)), cs(constraints_over_model(c, layout)) {
    dinv = Vector::Ones(layout.d);
    bool standardize = spec.standardize;
    if (standardize && cs.has_nonlinear()) {
      standardize = false;
      info.warnings.push_back("standardization disabled: nonlinear constraints are present");
    }
    if (standardize) {
      for (Eigen::Index j = 0; j < layout.d; ++j) {
        const double h = loss.H(j, j);
        if (h > 0.0) dinv[j] = 1.0 / std::sqrt(h);
      }
    }
  }

  Subproblem base(Mode mode) const {
    return Subproblem{loss.H, loss.g, layout, cs, dinv, mode, spec.s, {}, {}, nullptr, nullptr, {}, {}, spec.qp};
  }

  // Budget form; sequential linearization when nonlinear constraints are present.
  std::pair<Vector, SubproblemResult> run_budget(const std::vector<int>& fixed, SolverInfo& info,
                                                 const std::optional<Vector>& warm, Cuts& cuts) const {
    if (!cs.has_nonlinear()) {
      Subproblem sp = base(Mode::Budget);
      sp.fixed_zero = fixed;
      auto r = solve_subproblem(sp);
      info.qp_iterations += r.sol.iterations;
      info.jitter = r.sol.jitter;
      return {r.t, r};
    }
    Vector t = warm ? *warm : starting_point(loss, layout, cs, spec, info);
    const auto nnl = static_cast<Eigen::Index>(cs.nonlinear().size());
    Vector mu = Vector::Zero(nnl);
    SubproblemResult last;
    bool converged = false;
    cuts.J.resize(0, layout.d);
    cuts.rhs.resize(0);
    cuts.owner.clear();
    for (int round = 1; round <= spec.sl_max_rounds; ++round) {
      auto [J, rhs] = outer_linearize_nonlinear(cs, t);
      const Eigen::Index old_rows = cuts.J.rows();
      cuts.J.conservativeResize(old_rows + nnl, layout.d);
      cuts.rhs.conservativeResize(old_rows + nnl);
      cuts.J.bottomRows(nnl) = J;
      cuts.rhs.tail(nnl) = rhs;
      for (Eigen::Index k = 0; k < nnl; ++k) cuts.owner.push_back(static_cast<int>(k));
      Matrix H = loss.H;
      Vector g = loss.g;
      for (Eigen::Index k = 0; k < nnl; ++k) {
        if (mu[k] <= 0.0) continue;
        const Matrix Hk = cs.nonlinear()[static_cast<size_t>(k)].cone_hessian(t);
        H += 0.5 * mu[k] * Hk;
        g += 0.5 * mu[k] * Hk * t;
      }
      Subproblem sp{H, g, layout, cs, dinv, Mode::Budget, spec.s, {}, {}, &cuts.J, &cuts.rhs, fixed, std::nullopt, spec.qp};
      last = solve_subproblem(sp);
      info.qp_iterations += last.sol.iterations;
      info.jitter = last.sol.jitter;
      info.sl_rounds = round;
      const double step = (last.t - t).lpNorm<Eigen::Infinity>();
      t = last.t;
      mu.setZero();
      for (Eigen::Index c = 0; c < last.cut_multipliers.size(); ++c)
        mu[cuts.owner[static_cast<size_t>(c)]] += std::max(last.cut_multipliers[c], 0.0);
      if (step < spec.sl_tol && nonlinear_feasible(cs, t, spec.feasibility_tol)) {
        converged = true;
        break;
      }
    }
    if (!nonlinear_feasible(cs, t, spec.feasibility_tol)) {
      throw Error(ErrorKind::LinearizationStalled,
                  "sequential linearization did not reach a feasible point in " + std::to_string(spec.sl_max_rounds) +
                      " rounds");
    }
    if (!converged) {
      info.status = "RoundLimit";
      info.warnings.push_back("sequential linearization hit the round cap; iterate is feasible");
    }
    return {t, last};
  }
};

}  // namespace

void FitSpec::validate(Eigen::Index p) const {
  if (!(s >= 0.0)) throw Error(ErrorKind::Usage, "budget s must be >= 0");
  if (weights) {
    if (weights->size() != p) throw Error(ErrorKind::DimensionMismatch, "weights must have one entry per coefficient");
    if (!((weights->array() >= 0.0).all())) throw Error(ErrorKind::Usage, "weights must be >= 0");
  }
  if (!(sparsity_tol >= 0.0) || !(sl_tol > 0.0) || !(feasibility_tol > 0.0))
    throw Error(ErrorKind::Usage, "tolerances must be positive");
  if (sl_max_rounds < 1) throw Error(ErrorKind::Usage, "sl_max_rounds must be >= 1");
}

std::pair<Vector, std::vector<int>> sparsify(const Vector& beta, double tol) {
  if (!(tol >= 0.0)) throw Error(ErrorKind::Usage, "sparsify tolerance must be >= 0");
  Vector out = beta;
  std::vector<int> zeros;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (std::abs(out[j]) <= tol) {
      out[j] = 0.0;
      zeros.push_back(static_cast<int>(j));
    }
  }
  return {out, zeros};
}

FitResult fit_quadratic(const QuadraticLoss& loss, const ConstraintSet& cs_user, const FitSpec& spec) {
  SolverInfo info;
  Engine eng(loss, cs_user, spec, info);
  const Layout& layout = eng.layout;
  const Eigen::Index off = layout.offset;

  Cuts cuts;
  auto [t, res] = eng.run_budget({}, info, std::nullopt, cuts);
  auto [beta, zeros] = sparsify(layout.beta(t), spec.sparsity_tol);

  Vector t_sparse = t;
  t_sparse.tail(beta.size()) = beta;
  const double budget_slack = 1e-9 * std::max(1.0, spec.s);
  const auto within_budget = [&](const Vector& tt) {
    return layout.weights.dot(tt.cwiseAbs()) <= spec.s + budget_slack;
  };
  if (!is_feasible(eng.cs, t_sparse, spec.feasibility_tol) || !within_budget(t_sparse)) {
    // Zeroing broke feasibility: re-solve with those coefficients pinned at zero.
    std::vector<int> fixed;
    for (int j : zeros) fixed.push_back(static_cast<int>(j + off));
    info.warnings.push_back("re-solved with sparsified coefficients fixed at zero");
    auto [t2, res2] = eng.run_budget(fixed, info, std::optional<Vector>(t_sparse), cuts);
    res = res2;
    auto [beta2, zeros2] = sparsify(layout.beta(t2), spec.sparsity_tol);
    t_sparse = t2;
    t_sparse.tail(beta2.size()) = beta2;
    zeros = zeros2;
  }
  info.budget_multiplier = res.budget_multiplier;
  info.constraint_multipliers = stacked_multipliers(eng.cs, res, t_sparse, eng.cs.has_nonlinear() ? &cuts : nullptr);
  return finish(t_sparse, layout, eng.cs, loss, cs_user, spec, std::move(info), zeros);
}

QuadraticLoss data_loss(const Dataset& data, const ConstraintSet& cs, bool intercept) {
  data.validate();
  const Eigen::Index p = data.p();
  QuadraticLoss loss;
  if (cs.dim() == p + 1) {
    if (!intercept) throw Error(ErrorKind::DimensionMismatch, "constraint file addresses an intercept but intercept is off");
    Matrix X1(data.n(), p + 1);
    X1.col(0).setOnes();
    X1.rightCols(p) = data.X;
    loss.H = X1.transpose() * X1;
    loss.g = X1.transpose() * data.y;
    loss.c0 = data.y.squaredNorm();
    loss.has_intercept = true;
    return loss;
  }
  if (cs.dim() != p && !(cs.dim() == 0 && cs.empty()))
    throw Error(ErrorKind::DimensionMismatch, "constraint dimension " + std::to_string(cs.dim()) +
                                                  " does not match " + std::to_string(p) + " covariates");
  if (intercept) {
    const Vector xbar = data.X.colwise().mean();
    const double ybar = data.y.mean();
    const Matrix Xc = data.X.rowwise() - xbar.transpose();
    const Vector yc = data.y.array() - ybar;
    loss.H = Xc.transpose() * Xc;
    loss.g = Xc.transpose() * yc;
    loss.c0 = yc.squaredNorm();
  } else {
    loss.H = data.X.transpose() * data.X;
    loss.g = data.X.transpose() * data.y;
    loss.c0 = data.y.squaredNorm();
  }
  return loss;
}

double residual_sum_of_squares(const Dataset& data, const FitResult& fit) {
  return (data.y - data.X * fit.beta - Vector::Constant(data.n(), fit.intercept)).squaredNorm();
}

namespace {

// Maps a fit on centered data back to an intercept on the raw scale.
void restore_intercept(const Dataset& data, const ConstraintSet& cs, bool intercept, FitResult& fit) {
  if (intercept && cs.dim() != data.p() + 1) {
    fit.intercept = data.y.mean() - data.X.colwise().mean().dot(fit.beta);
  }
  fit.objective = residual_sum_of_squares(data, fit);
}

}  // namespace

FitResult fit_constrained(const Dataset& data, const ConstraintSet& cs, const FitSpec& spec) {
  const ConstraintSet effective = cs.dim() == 0 && cs.empty() ? ConstraintSet(static_cast<int>(data.p())) : cs;
  FitResult fit = fit_quadratic(data_loss(data, effective, spec.intercept), effective, spec);
  restore_intercept(data, effective, spec.intercept, fit);
  return fit;
}

FitResult fit_penalized(const Dataset& data, const ConstraintSet& cs_in, const Vector& lambda1,
                        const Vector& lambda2, const FitSpec& spec) {
  const ConstraintSet cs = cs_in.dim() == 0 && cs_in.empty() ? ConstraintSet(static_cast<int>(data.p())) : cs_in;
  const QuadraticLoss loss = data_loss(data, cs, spec.intercept);
  SolverInfo info;
  FitSpec budgetless = spec;
  budgetless.s = kInf;
  Engine eng(loss, cs, budgetless, info);
  const Layout& layout = eng.layout;
  const Eigen::Index p = layout.d - layout.offset;

  if (!(lambda1.size() == 1 || lambda1.size() == p))
    throw Error(ErrorKind::DimensionMismatch, "lambda1 must be a scalar or have one entry per coefficient");
  if (lambda2.size() != eng.cs.count())
    throw Error(ErrorKind::DimensionMismatch, "lambda2 must have one entry per constraint value");
  if ((lambda1.array() < 0.0).any() || (lambda2.array() < 0.0).any())
    throw Error(ErrorKind::Usage, "penalty multipliers must be >= 0");

  Vector penalty = Vector::Zero(layout.d);
  penalty.tail(p) = lambda1.size() == 1 ? Vector::Constant(p, lambda1[0]) : lambda1;
  penalty.tail(p).array() *= layout.weights.tail(p).array();

  const bool iterate = eng.cs.has_nonlinear() && lambda2.tail(static_cast<Eigen::Index>(eng.cs.nonlinear().size())).any();
  Vector t = Vector::Zero(layout.d);
  SubproblemResult res;
  const int rounds = iterate ? spec.sl_max_rounds : 1;
  bool converged = !iterate;
  for (int round = 1; round <= rounds; ++round) {
    Subproblem sp = eng.base(Mode::Penalty);
    sp.penalty = penalty;
    sp.linear_cost = eng.cs.count() > 0 ? Vector(jacobian(eng.cs, t).transpose() * lambda2) : Vector::Zero(layout.d);
    res = solve_subproblem(sp);
    info.qp_iterations += res.sol.iterations;
    info.jitter = res.sol.jitter;
    info.sl_rounds = iterate ? round : 0;
    const double step = (res.t - t).lpNorm<Eigen::Infinity>();
    t = res.t;
    if (iterate && step < spec.sl_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    info.status = "RoundLimit";
    info.warnings.push_back("penalized linearization loop hit the round cap");
  }
  auto [beta, zeros] = sparsify(layout.beta(t), spec.sparsity_tol);
  t.tail(beta.size()) = beta;
  FitResult fit = finish(t, layout, eng.cs, loss, cs, spec, std::move(info), zeros);
  restore_intercept(data, cs, spec.intercept, fit);
  return fit;
}

std::pair<double, Vector> ols(const Dataset& data, bool intercept) {
  if (!intercept) {
    return {0.0, Eigen::CompleteOrthogonalDecomposition<Matrix>(data.X).solve(data.y)};
  }
  const Vector xbar = data.X.colwise().mean();
  const Matrix Xc = data.X.rowwise() - xbar.transpose();
  const Vector yc = data.y.array() - data.y.mean();
  Vector beta = Eigen::CompleteOrthogonalDecomposition<Matrix>(Xc).solve(yc);
  return {data.y.mean() - xbar.dot(beta), beta};
}

}  // namespace pclasso
