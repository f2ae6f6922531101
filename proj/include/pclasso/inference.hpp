#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pclasso/estimator.hpp"
#include "pclasso/tuning.hpp"

namespace pclasso {

/// p - |zero_set| - #{k : |g_k(beta)| <= tol}, floored at 0. Each equality row counts once
/// and always; nonlinear constraints are evaluated on g itself.
int degrees_of_freedom(const FitResult& fit, const ConstraintSet& cs, double tol);

enum class BootstrapMode { FixedS, ReTuned };

const char* to_string(BootstrapMode m);
BootstrapMode parse_bootstrap_mode(const std::string& name);

struct BootstrapOptions {
  int B = 500;
  BootstrapMode mode = BootstrapMode::FixedS;
  std::uint64_t seed = 0;
  // Used by ReTuned; the fold seed of replicate b is tuning.seed + b.
  TuneOptions tuning;
};

struct BootstrapReport {
  int B = 0;
  BootstrapMode mode = BootstrapMode::FixedS;
  std::uint64_t seed = 0;
  Vector mean;
  Vector se;
  Vector selection_freq;
  int failures = 0;
  bool unreliable = false;
  // Budget used by each replicate (NaN for failed ones).
  std::vector<double> s_used;
};

/// Row indices of replicate b: n draws with replacement from mt19937_64(seed + b).
std::vector<int> bootstrap_rows(int n, std::uint64_t seed, int b);

/// Case-resampling bootstrap; replicates run in parallel and are reduced in index order.
BootstrapReport bootstrap_se(const Dataset& data, const ConstraintSet& cs, const FitSpec& spec,
                             const BootstrapOptions& opts);

/// Coefficients and budget fitted on replicate b; throwing marks the replicate failed.
using ReplicateFit = std::function<std::pair<Vector, double>(const Dataset& resample, int b)>;

/// Resampling engine shared by every bootstrap flavour. `p` is the coefficient count.
BootstrapReport bootstrap_with(const Dataset& data, Eigen::Index p, const BootstrapOptions& opts,
                               const ReplicateFit& fit, bool parallel = true);

/// Single-threaded reference for bootstrap_se.
BootstrapReport bootstrap_se_serial(const Dataset& data, const ConstraintSet& cs, const FitSpec& spec,
                                    const BootstrapOptions& opts);

}  // namespace pclasso
