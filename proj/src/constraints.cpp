#include "pclasso/constraints.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pclasso/error.hpp"

namespace pclasso {

namespace {

constexpr double kConeFloor = 1e-14;

void append_row(Matrix& M, Vector& v, const Vector& row, double rhs) {
  const Eigen::Index r = M.rows();
  M.conservativeResize(r + 1, row.size());
  v.conservativeResize(r + 1);
  M.row(r) = row.transpose();
  v[r] = rhs;
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw Error(ErrorKind::Parse, "constraints line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_number(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_index(std::string_view tok, int& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

struct ParsedLine {
  enum class Kind { Lin, Nl } kind;
  std::vector<double> coef;
  std::string op;
  double rhs = 0.0;
  int idx[3] = {0, 0, 0};
};

// Splits a non-comment line into its tagged payload; returns false for blank lines.
bool tokenize_line(std::string_view raw, int line_no, ParsedLine& out) {
  if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
  auto toks = split_ws(raw);
  if (toks.empty()) return false;
  std::string_view tag = toks.front();
  std::vector<std::string_view> rest(toks.begin() + 1, toks.end());
  if (tag != "lin:" && tag != "nl:") {
    // Allow "lin:" glued to the first token, e.g. "lin:-1".
    if (tag.starts_with("lin:") || tag.starts_with("nl:")) {
      const size_t colon = tag.find(':');
      rest.insert(rest.begin(), tag.substr(colon + 1));
      tag = tag.substr(0, colon + 1);
    } else {
      parse_error(line_no, "expected 'lin:' or 'nl:'");
    }
  }
  if (tag == "lin:") {
    out.kind = ParsedLine::Kind::Lin;
    auto op_it = std::find_if(rest.begin(), rest.end(),
                              [](std::string_view t) { return t == "<=" || t == ">=" || t == "="; });
    if (op_it == rest.end()) parse_error(line_no, "missing operator (<=, >= or =)");
    if (op_it + 2 != rest.end()) parse_error(line_no, "expected exactly one right-hand side after operator");
    out.op = std::string(*op_it);
    for (auto it = rest.begin(); it != op_it; ++it) {
      double v;
      if (!parse_number(*it, v)) parse_error(line_no, "invalid coefficient '" + std::string(*it) + "'");
      out.coef.push_back(v);
    }
    if (!parse_number(*(op_it + 1), out.rhs)) parse_error(line_no, "invalid right-hand side");
  } else {
    out.kind = ParsedLine::Kind::Nl;
    if (rest.empty() || rest.front() != "negdet") parse_error(line_no, "unknown nonlinear kind");
    if (rest.size() != 4) parse_error(line_no, "negdet takes exactly three indices");
    for (int t = 0; t < 3; ++t) {
      if (!parse_index(rest[static_cast<size_t>(t) + 1], out.idx[t]))
        parse_error(line_no, "invalid index '" + std::string(rest[static_cast<size_t>(t) + 1]) + "'");
    }
  }
  return true;
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    f(line, line_no);
    if (end == text.size()) break;
    pos = end + 1;
  }
}

}  // namespace

NonlinearConstraint NonlinearConstraint::neg_det2(int i, int j, int k) {
  if (i < 0 || j < 0 || k < 0) throw Error(ErrorKind::DimensionMismatch, "negdet: negative index");
  if (i == j || i == k || j == k) throw Error(ErrorKind::DimensionMismatch, "negdet: indices must be distinct");
  return NonlinearConstraint(NonlinearKind::NegDet2, i, j, k);
}

int NonlinearConstraint::max_index() const { return std::max({i_, j_, k_}); }

double NonlinearConstraint::value(const Vector& b) const { return b[k_] * b[k_] - b[i_] * b[j_]; }

Vector NonlinearConstraint::gradient(const Vector& b) const {
  Vector g = Vector::Zero(b.size());
  g[i_] = -b[j_];
  g[j_] = -b[i_];
  g[k_] = 2.0 * b[k_];
  return g;
}

double NonlinearConstraint::cone_value(const Vector& b) const {
  const double half_diff = 0.5 * (b[i_] - b[j_]);
  return std::hypot(b[k_], half_diff) + 0.5 * (b[i_] + b[j_]);
}

Vector NonlinearConstraint::cone_gradient(const Vector& b) const {
  Vector g = Vector::Zero(b.size());
  const double half_diff = 0.5 * (b[i_] - b[j_]);
  const double r = std::hypot(b[k_], half_diff);
  g[i_] = 0.5;
  g[j_] = 0.5;
  if (r > kConeFloor) {
    g[i_] += 0.5 * half_diff / r;
    g[j_] -= 0.5 * half_diff / r;
    g[k_] = b[k_] / r;
  }
  return g;
}

Matrix NonlinearConstraint::cone_hessian(const Vector& b) const {
  Matrix H = Matrix::Zero(b.size(), b.size());
  const double u = 0.5 * (b[i_] - b[j_]);
  const double v = b[k_];
  const double r = std::hypot(u, v);
  if (r <= kConeFloor) return H;
  // Hessian of r(u, v) is (I - n n') / r with n = (u, v) / r; chain through u = (b_i - b_j)/2.
  const double huu = v * v / (r * r * r);
  const double hvv = u * u / (r * r * r);
  const double huv = -u * v / (r * r * r);
  const int idx[3] = {i_, j_, k_};
  const double du[3] = {0.5, -0.5, 0.0};
  const double dv[3] = {0.0, 0.0, 1.0};
  for (int a = 0; a < 3; ++a) {
    for (int c = 0; c < 3; ++c) {
      H(idx[a], idx[c]) = du[a] * huu * du[c] + du[a] * huv * dv[c] + dv[a] * huv * du[c] + dv[a] * hvv * dv[c];
    }
  }
  return H;
}

ConstraintSet::ConstraintSet(int dim)
    : dim_(dim), A_(0, dim), a_(0), E_(0, dim), e_(0) {
  if (dim < 0) throw Error(ErrorKind::DimensionMismatch, "ConstraintSet: negative dimension");
}

void ConstraintSet::add_inequality(const Vector& row, double rhs) {
  if (row.size() != dim_) throw Error(ErrorKind::DimensionMismatch, "inequality row has wrong length");
  if (!row.allFinite() || !std::isfinite(rhs)) throw Error(ErrorKind::Data, "non-finite constraint row");
  append_row(A_, a_, row, rhs);
  auto_rows_.push_back(0);
}

void ConstraintSet::add_equality(const Vector& row, double rhs) {
  if (row.size() != dim_) throw Error(ErrorKind::DimensionMismatch, "equality row has wrong length");
  if (!row.allFinite() || !std::isfinite(rhs)) throw Error(ErrorKind::Data, "non-finite constraint row");
  append_row(E_, e_, row, rhs);
}

void ConstraintSet::add_neg_det2(int i, int j, int k) {
  auto nl = NonlinearConstraint::neg_det2(i, j, k);
  if (nl.max_index() >= dim_) throw Error(ErrorKind::DimensionMismatch, "negdet index out of range");
  nonlinear_.push_back(nl);
  for (int idx : {i, j}) {
    Vector row = Vector::Zero(dim_);
    row[idx] = 1.0;
    append_row(A_, a_, row, 0.0);
    auto_rows_.push_back(1);
  }
}

ConstraintSet ConstraintSet::lifted(int new_dim, const std::vector<int>& index_map) const {
  if (static_cast<int>(index_map.size()) != dim_)
    throw Error(ErrorKind::DimensionMismatch, "lifted: index map length mismatch");
  ConstraintSet out(new_dim);
  const auto map_row = [&](const auto& row) {
    Vector r = Vector::Zero(new_dim);
    for (int c = 0; c < dim_; ++c) r[index_map[static_cast<size_t>(c)]] = row[c];
    return r;
  };
  out.A_.resize(A_.rows(), new_dim);
  for (Eigen::Index r = 0; r < A_.rows(); ++r) out.A_.row(r) = map_row(A_.row(r)).transpose();
  out.a_ = a_;
  out.auto_rows_ = auto_rows_;
  out.E_.resize(E_.rows(), new_dim);
  for (Eigen::Index r = 0; r < E_.rows(); ++r) out.E_.row(r) = map_row(E_.row(r)).transpose();
  out.e_ = e_;
  for (const auto& nl : nonlinear_) {
    out.nonlinear_.push_back(NonlinearConstraint::neg_det2(index_map[static_cast<size_t>(nl.i())],
                                                           index_map[static_cast<size_t>(nl.j())],
                                                           index_map[static_cast<size_t>(nl.k())]));
  }
  return out;
}

namespace {

bool same(const Matrix& x, const Matrix& y) {
  return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
}

}  // namespace

bool operator==(const ConstraintSet& lhs, const ConstraintSet& rhs) {
  return lhs.dim_ == rhs.dim_ && same(lhs.A_, rhs.A_) && same(lhs.a_, rhs.a_) &&
         lhs.auto_rows_ == rhs.auto_rows_ && same(lhs.E_, rhs.E_) && same(lhs.e_, rhs.e_) &&
         lhs.nonlinear_ == rhs.nonlinear_;
}

Vector evaluate(const ConstraintSet& cs, const Vector& beta) {
  if (beta.size() != cs.dim()) throw Error(ErrorKind::DimensionMismatch, "evaluate: beta has wrong length");
  Vector out(cs.count());
  const Eigen::Index ni = cs.A().rows();
  const Eigen::Index ne = cs.E().rows();
  if (ni > 0) out.head(ni) = cs.A() * beta - cs.a();
  if (ne > 0) {
    const Vector r = cs.E() * beta - cs.e();
    out.segment(ni, ne) = r;
    out.segment(ni + ne, ne) = -r;
  }
  for (size_t k = 0; k < cs.nonlinear().size(); ++k) {
    out[ni + 2 * ne + static_cast<Eigen::Index>(k)] = cs.nonlinear()[k].value(beta);
  }
  return out;
}

Matrix jacobian(const ConstraintSet& cs, const Vector& beta) {
  if (beta.size() != cs.dim()) throw Error(ErrorKind::DimensionMismatch, "jacobian: beta has wrong length");
  Matrix J(cs.count(), cs.dim());
  const Eigen::Index ni = cs.A().rows();
  const Eigen::Index ne = cs.E().rows();
  if (ni > 0) J.topRows(ni) = cs.A();
  if (ne > 0) {
    J.middleRows(ni, ne) = cs.E();
    J.middleRows(ni + ne, ne) = -cs.E();
  }
  for (size_t k = 0; k < cs.nonlinear().size(); ++k) {
    J.row(ni + 2 * ne + static_cast<Eigen::Index>(k)) = cs.nonlinear()[k].gradient(beta).transpose();
  }
  return J;
}

std::pair<Matrix, Vector> linearize_at(const ConstraintSet& cs, const Vector& beta0) {
  Matrix J = jacobian(cs, beta0);
  Vector rhs = J * beta0 - evaluate(cs, beta0);
  return {std::move(J), std::move(rhs)};
}

std::pair<Matrix, Vector> outer_linearize_nonlinear(const ConstraintSet& cs, const Vector& beta0) {
  if (beta0.size() != cs.dim()) throw Error(ErrorKind::DimensionMismatch, "linearize: beta has wrong length");
  const auto n = static_cast<Eigen::Index>(cs.nonlinear().size());
  Matrix J(n, cs.dim());
  Vector rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& nl = cs.nonlinear()[static_cast<size_t>(k)];
    const Vector g = nl.cone_gradient(beta0);
    J.row(k) = g.transpose();
    rhs[k] = g.dot(beta0) - nl.cone_value(beta0);
  }
  return {std::move(J), std::move(rhs)};
}

bool is_feasible(const ConstraintSet& cs, const Vector& beta, double tol) {
  if (cs.count() == 0) return true;
  return evaluate(cs, beta).maxCoeff() <= tol;
}

ConstraintSet parse_constraints(std::string_view text, int p) {
  if (p < 1) throw Error(ErrorKind::DimensionMismatch, "constraint dimension must be positive");
  ConstraintSet cs(p);
  std::vector<std::pair<Vector, double>> ineq, eq;
  std::vector<std::array<int, 3>> negdet;
  for_each_line(text, [&](std::string_view line, int line_no) {
    ParsedLine pl;
    if (!tokenize_line(line, line_no, pl)) return;
    if (pl.kind == ParsedLine::Kind::Lin) {
      if (static_cast<int>(pl.coef.size()) != p) {
        parse_error(line_no, "expected " + std::to_string(p) + " coefficients, found " +
                                 std::to_string(pl.coef.size()));
      }
      Vector row = Eigen::Map<const Vector>(pl.coef.data(), p);
      if (row.cwiseAbs().maxCoeff() == 0.0) parse_error(line_no, "all-zero constraint row");
      if (pl.op == "<=") ineq.emplace_back(row, pl.rhs);
      else if (pl.op == ">=") ineq.emplace_back(-row, -pl.rhs);
      else eq.emplace_back(row, pl.rhs);
    } else {
      for (int t = 0; t < 3; ++t) {
        if (pl.idx[t] < 1 || pl.idx[t] > p) parse_error(line_no, "index " + std::to_string(pl.idx[t]) + " out of range");
      }
      if (pl.idx[0] == pl.idx[1] || pl.idx[0] == pl.idx[2] || pl.idx[1] == pl.idx[2])
        parse_error(line_no, "negdet indices must be distinct");
      negdet.push_back({pl.idx[0] - 1, pl.idx[1] - 1, pl.idx[2] - 1});
    }
  });
  for (const auto& [row, rhs] : ineq) cs.add_inequality(row, rhs);
  for (const auto& [row, rhs] : eq) cs.add_equality(row, rhs);
  for (const auto& t : negdet) cs.add_neg_det2(t[0], t[1], t[2]);
  return cs;
}

std::string serialize_constraints(const ConstraintSet& cs) {
  std::ostringstream os;
  const auto write_row = [&](const auto& row, const char* op, double rhs) {
    os << "lin:";
    for (Eigen::Index c = 0; c < row.size(); ++c) os << ' ' << fmt17(row[c]);
    os << ' ' << op << ' ' << fmt17(rhs) << '\n';
  };
  for (Eigen::Index r = 0; r < cs.A().rows(); ++r) {
    if (!cs.auto_rows()[static_cast<size_t>(r)]) write_row(cs.A().row(r), "<=", cs.a()[r]);
  }
  for (Eigen::Index r = 0; r < cs.E().rows(); ++r) write_row(cs.E().row(r), "=", cs.e()[r]);
  for (const auto& nl : cs.nonlinear()) {
    os << "nl: negdet " << nl.i() + 1 << ' ' << nl.j() + 1 << ' ' << nl.k() + 1 << '\n';
  }
  return os.str();
}

int infer_constraint_dimension(std::string_view text, int p) {
  int lin_count = -1;
  int max_idx = 0;
  for_each_line(text, [&](std::string_view line, int line_no) {
    ParsedLine pl;
    if (!tokenize_line(line, line_no, pl)) return;
    if (pl.kind == ParsedLine::Kind::Lin) {
      const int n = static_cast<int>(pl.coef.size());
      if (lin_count >= 0 && n != lin_count) parse_error(line_no, "inconsistent coefficient count");
      lin_count = n;
    } else {
      max_idx = std::max({max_idx, pl.idx[0], pl.idx[1], pl.idx[2]});
    }
  });
  int dim = lin_count >= 0 ? lin_count : (max_idx > p ? p + 1 : p);
  if (dim != p && dim != p + 1) {
    throw Error(ErrorKind::DimensionMismatch, "constraint file addresses " + std::to_string(dim) +
                                                  " coefficients; expected " + std::to_string(p) + " or " +
                                                  std::to_string(p + 1));
  }
  if (max_idx > dim) throw Error(ErrorKind::DimensionMismatch, "negdet index out of range");
  return dim;
}

}  // namespace pclasso
