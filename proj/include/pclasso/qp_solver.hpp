#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace pclasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense convex quadratic program
///
///   minimize    1/2 x'Qx + c'x
///   subject to  A_ineq x <= b_ineq,  A_eq x = b_eq,  x >= lower_bounds.
///
/// Q is symmetrized on construction. Lower bounds may be -inf per coordinate.
class QpProblem {
 public:
  QpProblem(Matrix Q, Vector c);
  QpProblem(Matrix Q, Vector c, Matrix A_ineq, Vector b_ineq);
  QpProblem(Matrix Q, Vector c, Matrix A_ineq, Vector b_ineq, Matrix A_eq, Vector b_eq,
            std::optional<Vector> lower_bounds = std::nullopt);

  Eigen::Index dim() const { return c_.size(); }
  Eigen::Index num_ineq() const { return b_ineq_.size(); }
  Eigen::Index num_eq() const { return b_eq_.size(); }

  const Matrix& Q() const { return Q_; }
  const Vector& c() const { return c_; }
  const Matrix& A_ineq() const { return A_ineq_; }
  const Vector& b_ineq() const { return b_ineq_; }
  const Matrix& A_eq() const { return A_eq_; }
  const Vector& b_eq() const { return b_eq_; }
  const std::optional<Vector>& lower_bounds() const { return lower_bounds_; }

  double objective(const Vector& x) const { return 0.5 * x.dot(Q_ * x) + c_.dot(x); }

 private:
  Matrix Q_;
  Vector c_;
  Matrix A_ineq_;
  Vector b_ineq_;
  Matrix A_eq_;
  Vector b_eq_;
  std::optional<Vector> lower_bounds_;
};

enum class QpStatus { Optimal, Infeasible, IterationLimit, Unbounded };

const char* to_string(QpStatus status);

struct QpOptions {
  double kkt_tol = 1e-8;
  double feasibility_tol = 1e-9;
  // 0 selects the default 50 * (d + m).
  int max_iter = 0;
  double jitter_scale = 1e-10;
};

struct QpSolution {
  Vector x;
  double objective = 0.0;
  // Binding rows of A_ineq (ascending).
  std::vector<int> active_set;
  // Coordinates sitting on their lower bound (ascending).
  std::vector<int> active_bounds;
  Vector mult_ineq;
  Vector mult_eq;
  Vector mult_bound;
  int iterations = 0;
  QpStatus status = QpStatus::IterationLimit;
  // Ridge added to Q inside the KKT factorizations (0 when Q was positive definite).
  double jitter = 0.0;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double max() const;
};

/// Primal active-set solver. A phase-1 subproblem locates a feasible point when
/// `x0` is absent or infeasible.
QpSolution solve_qp(const QpProblem& problem, const std::optional<Vector>& x0 = std::nullopt,
                    const QpOptions& opts = {});

/// Max-norm residuals of the four KKT blocks, evaluated at the solution's multipliers.
KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& solution);

}  // namespace pclasso
