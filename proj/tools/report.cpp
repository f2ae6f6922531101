#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <openssl/evp.h>

#include "pclasso/error.hpp"

namespace pclasso::cli {

namespace {

std::string number(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write(std::ostringstream& os, const json& j, int indent, int depth) {
  const auto pad = [&](int d) {
    if (indent >= 0) os << '\n' << std::string(static_cast<size_t>(indent * d), ' ');
  };
  const char* colon = indent >= 0 ? ": " : ":";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map order: sorted keys
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        os << json(it.key()).dump() << colon;
        write(os, it.value(), indent, depth + 1);
      }
      pad(depth);
      os << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        write(os, v, indent, depth + 1);
      }
      pad(depth);
      os << ']';
      return;
    }
    case json::value_t::number_float:
      os << number(j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

json int_list(const std::vector<int>& v) { return v; }

}  // namespace

std::string dump_json(const json& j) {
  std::ostringstream os;
  write(os, j, 2, 0);
  os << '\n';
  return os.str();
}

std::string dump_json_line(const json& j) {
  std::ostringstream os;
  write(os, j, -1, 0);
  return os.str();
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const FitResult& fit, const std::vector<std::string>& names) {
  const auto& si = fit.solver_info;
  return {
      {"names", names},
      {"beta", to_json(fit.beta)},
      {"intercept", fit.intercept},
      {"l1_norm", fit.l1_norm},
      {"objective", fit.objective},
      {"active_constraints", int_list(fit.active_constraints)},
      {"zero_set", int_list(fit.zero_set)},
      {"df", fit.df},
      {"solver_info",
       {{"status", si.status},
        {"qp_iterations", si.qp_iterations},
        {"sl_rounds", si.sl_rounds},
        {"jitter", si.jitter},
        {"budget_multiplier", si.budget_multiplier},
        {"constraint_multipliers", to_json(si.constraint_multipliers)},
        {"used_mc_start", si.used_mc_start},
        {"warnings", si.warnings}}},
  };
}

json to_json(const TuningCurve& curve) {
  json points = json::array();
  for (Eigen::Index i = 0; i < curve.grid.size(); ++i) {
    const bool ok = curve.valid[static_cast<size_t>(i)] != 0;
    points.push_back({{"s", curve.grid[i]}, {"value", ok ? json(curve.pe[i]) : json(nullptr)}, {"valid", ok}});
  }
  json out = {{"criterion", to_string(curve.criterion)},
              {"curve", points},
              {"selected_index", curve.selected_index},
              {"selected_s", curve.selected_s},
              {"diagnostics", curve.diagnostics}};
  if (curve.criterion == Criterion::CV) out["folds"] = curve.folds;
  return out;
}

json to_json(const BootstrapReport& r, const std::vector<std::string>& names) {
  return {{"B", r.B},
          {"mode", to_string(r.mode)},
          {"seed", r.seed},
          {"names", names},
          {"mean", to_json(r.mean)},
          {"se", to_json(r.se)},
          {"selection_freq", to_json(r.selection_freq)},
          {"failures", r.failures},
          {"unreliable", r.unreliable},
          {"s_used", r.s_used}};
}

json to_json(const LsaSurrogate& s) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < s.precision.rows(); ++r) rows.push_back(to_json(Vector(s.precision.row(r).transpose())));
  return {{"family", to_string(s.family)},
          {"beta_tilde", to_json(s.beta_tilde)},
          {"precision", rows},
          {"n", s.n},
          {"loss_value", s.loss_value},
          {"intercept", s.has_intercept},
          {"iterations", s.iterations}};
}

std::string curve_csv(const TuningCurve& curve) {
  std::string out = "s,value,valid\n";
  for (Eigen::Index i = 0; i < curve.grid.size(); ++i) {
    const bool ok = curve.valid[static_cast<size_t>(i)] != 0;
    out += number(curve.grid[i]) + "," + (ok ? number(curve.pe[i]) : std::string("nan")) + "," + (ok ? "1" : "0") + "\n";
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::SolverFailure, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

}  // namespace pclasso::cli
