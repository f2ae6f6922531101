#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pclasso/qp_solver.hpp"

namespace pclasso {

enum class NonlinearKind { NegDet2 };

/// A registered smooth constraint g(beta) <= 0.
///
/// NegDet2(i, j, k): beta_k^2 - beta_i * beta_j <= 0. Together with beta_i <= 0 and
/// beta_j <= 0 it describes a rotated second-order cone, which is convex even though
/// g itself is not a convex function. Indices are zero-based.
class NonlinearConstraint {
 public:
  static NonlinearConstraint neg_det2(int i, int j, int k);

  NonlinearKind kind() const { return kind_; }
  int i() const { return i_; }
  int j() const { return j_; }
  int k() const { return k_; }
  int max_index() const;

  double value(const Vector& beta) const;
  // Gradient row of length beta.size().
  Vector gradient(const Vector& beta) const;

  // Convex representation h(beta) <= 0 of the same feasible region (given the paired
  // sign rows): h = sqrt(beta_k^2 + ((beta_i - beta_j)/2)^2) + (beta_i + beta_j)/2.
  // Its linearizations are valid outer approximations at every expansion point.
  double cone_value(const Vector& beta) const;
  Vector cone_gradient(const Vector& beta) const;
  Matrix cone_hessian(const Vector& beta) const;

  bool operator==(const NonlinearConstraint&) const = default;

 private:
  NonlinearConstraint(NonlinearKind kind, int i, int j, int k) : kind_(kind), i_(i), j_(j), k_(k) {}

  NonlinearKind kind_;
  int i_;
  int j_;
  int k_;
};

/// Prior constraints normalized to g(beta) <= 0:
///   A beta <= a,  E beta = e,  nonlinear_k(beta) <= 0.
/// The stacked value vector is [A beta - a; E beta - e; -(E beta - e); g_nl(beta)].
class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(int dim);

  int dim() const { return dim_; }
  bool empty() const { return A_.rows() == 0 && E_.rows() == 0 && nonlinear_.empty(); }
  bool has_nonlinear() const { return !nonlinear_.empty(); }

  // Number of entries in the stacked value vector.
  Eigen::Index count() const { return A_.rows() + 2 * E_.rows() + static_cast<Eigen::Index>(nonlinear_.size()); }

  const Matrix& A() const { return A_; }
  const Vector& a() const { return a_; }
  const Matrix& E() const { return E_; }
  const Vector& e() const { return e_; }
  const std::vector<NonlinearConstraint>& nonlinear() const { return nonlinear_; }
  // Rows of A that were added automatically alongside a nonlinear constraint.
  const std::vector<char>& auto_rows() const { return auto_rows_; }

  void add_inequality(const Vector& row, double rhs);
  void add_equality(const Vector& row, double rhs);
  // Appends NegDet2(i, j, k) together with the sign rows beta_i <= 0, beta_j <= 0.
  void add_neg_det2(int i, int j, int k);

  // Same constraints over a larger coordinate vector: coordinate c maps to index_map[c].
  ConstraintSet lifted(int new_dim, const std::vector<int>& index_map) const;

  friend bool operator==(const ConstraintSet& lhs, const ConstraintSet& rhs);

 private:
  int dim_ = 0;
  Matrix A_ = Matrix(0, 0);
  Vector a_ = Vector(0);
  std::vector<char> auto_rows_;
  Matrix E_ = Matrix(0, 0);
  Vector e_ = Vector(0);
  std::vector<NonlinearConstraint> nonlinear_;
};

Vector evaluate(const ConstraintSet& cs, const Vector& beta);
Matrix jacobian(const ConstraintSet& cs, const Vector& beta);

/// First-order expansion of the stacked g at beta0: returns (J, J beta0 - g(beta0)).
std::pair<Matrix, Vector> linearize_at(const ConstraintSet& cs, const Vector& beta0);

/// Linearization of the nonlinear part only, using the convex cone form for each
/// NegDet2 so the resulting halfspaces never cut off a feasible point.
std::pair<Matrix, Vector> outer_linearize_nonlinear(const ConstraintSet& cs, const Vector& beta0);

bool is_feasible(const ConstraintSet& cs, const Vector& beta, double tol);

/// Parses the line-oriented constraint format:
///   # comment
///   lin: c1 ... cp <= rhs      (also >= and =)
///   nl: negdet i j k           (1-based)
ConstraintSet parse_constraints(std::string_view text, int p);

/// Canonical text form: user inequalities, equalities, then nonlinear lines.
std::string serialize_constraints(const ConstraintSet& cs);

/// Dimension addressed by a constraint file for a model with p covariates: p, or p + 1
/// when the file carries a leading intercept column.
int infer_constraint_dimension(std::string_view text, int p);

}  // namespace pclasso
