#include "pclasso/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "pclasso/error.hpp"

namespace pclasso {

int degrees_of_freedom(const FitResult& fit, const ConstraintSet& cs, double tol) {
  const auto p = static_cast<long>(fit.beta.size());
  long df = p - static_cast<long>(fit.zero_set.size());
  if (!cs.empty()) {
    Vector t;
    if (cs.dim() == fit.beta.size() + 1) {
      t.resize(cs.dim());
      t[0] = fit.intercept;
      t.tail(fit.beta.size()) = fit.beta;
    } else {
      t = fit.beta;
    }
    const Vector v = evaluate(cs, t);
    const Eigen::Index ni = cs.A().rows();
    const Eigen::Index ne = cs.E().rows();
    for (Eigen::Index k = 0; k < ni; ++k)
      if (std::abs(v[k]) <= tol) --df;
    df -= ne;
    for (Eigen::Index k = ni + 2 * ne; k < v.size(); ++k)
      if (std::abs(v[k]) <= tol) --df;
  }
  return static_cast<int>(std::max(df, 0L));
}

const char* to_string(BootstrapMode m) { return m == BootstrapMode::FixedS ? "fixed" : "retune"; }

BootstrapMode parse_bootstrap_mode(const std::string& name) {
  if (name == "fixed") return BootstrapMode::FixedS;
  if (name == "retune") return BootstrapMode::ReTuned;
  throw Error(ErrorKind::Usage, "unknown bootstrap mode '" + name + "' (expected fixed or retune)");
}

std::vector<int> bootstrap_rows(int n, std::uint64_t seed, int b) {
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(b));
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<int> rows(static_cast<size_t>(n));
  for (auto& r : rows) r = pick(rng);
  return rows;
}

namespace {

struct Replicate {
  std::optional<Vector> beta;
  double s = std::numeric_limits<double>::quiet_NaN();
};

Replicate run_replicate(const Dataset& data, const BootstrapOptions& opts, const ReplicateFit& fit, int b) {
  Replicate out;
  try {
    const Dataset boot = data.rows(bootstrap_rows(static_cast<int>(data.n()), opts.seed, b));
    auto [beta, s] = fit(boot, b);
    out.beta = std::move(beta);
    out.s = s;
  } catch (const Error&) {
    out.beta.reset();
  }
  return out;
}

ReplicateFit gaussian_fit(const ConstraintSet& cs, const FitSpec& spec, const BootstrapOptions& opts) {
  return [&cs, spec, opts](const Dataset& boot, int b) {
    FitSpec local = spec;
    if (opts.mode == BootstrapMode::ReTuned) {
      TuneOptions t = opts.tuning;
      t.seed = opts.tuning.seed + static_cast<std::uint64_t>(b);
      local.s = tune(boot, cs, spec, t).selected_s;
    }
    return std::make_pair(fit_constrained(boot, cs, local).beta, local.s);
  };
}

void check(const Dataset& data, const BootstrapOptions& opts) {
  if (opts.B < 2) throw Error(ErrorKind::Usage, "bootstrap needs B >= 2");
  data.validate();
}

BootstrapReport summarize(const std::vector<Replicate>& reps, Eigen::Index p, const BootstrapOptions& opts) {
  BootstrapReport r;
  r.B = opts.B;
  r.mode = opts.mode;
  r.seed = opts.seed;
  r.mean = Vector::Zero(p);
  r.se = Vector::Zero(p);
  r.selection_freq = Vector::Zero(p);
  int ok = 0;
  for (const auto& rep : reps) {
    r.s_used.push_back(rep.s);
    if (!rep.beta) {
      ++r.failures;
      continue;
    }
    ++ok;
    r.mean += *rep.beta;
    for (Eigen::Index j = 0; j < p; ++j)
      if ((*rep.beta)[j] != 0.0) r.selection_freq[j] += 1.0;
  }
  if (ok > 0) {
    r.mean /= ok;
    r.selection_freq /= ok;
  }
  if (ok > 1) {
    for (const auto& rep : reps) {
      if (rep.beta) r.se += (*rep.beta - r.mean).cwiseAbs2();
    }
    r.se = (r.se / static_cast<double>(ok - 1)).cwiseSqrt();
  }
  r.unreliable = 2 * r.failures >= opts.B;
  return r;
}

}  // namespace

BootstrapReport bootstrap_with(const Dataset& data, Eigen::Index p, const BootstrapOptions& opts,
                               const ReplicateFit& fit, bool parallel) {
  check(data, opts);
  std::vector<Replicate> reps(static_cast<size_t>(opts.B));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int b = 0; b < opts.B; ++b) reps[static_cast<size_t>(b)] = run_replicate(data, opts, fit, b);
  return summarize(reps, p, opts);
}

BootstrapReport bootstrap_se(const Dataset& data, const ConstraintSet& cs, const FitSpec& spec,
                             const BootstrapOptions& opts) {
  return bootstrap_with(data, data.p(), opts, gaussian_fit(cs, spec, opts), true);
}

BootstrapReport bootstrap_se_serial(const Dataset& data, const ConstraintSet& cs, const FitSpec& spec,
                                    const BootstrapOptions& opts) {
  check(data, opts);
  const ReplicateFit fit = gaussian_fit(cs, spec, opts);
  std::vector<Replicate> reps;
  for (int b = 0; b < opts.B; ++b) reps.push_back(run_replicate(data, opts, fit, b));
  return summarize(reps, data.p(), opts);
}

}  // namespace pclasso
