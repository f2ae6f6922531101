#pragma once

#include <cstdint>
#include <optional>

#include "pclasso/constraints.hpp"

namespace pclasso {

/// Gaussian proposal N(mu, sigma) for the Monte Carlo starting point, where
/// mu = (X'X)^{-1} X'y and sigma = (X'X)^{-1}.
class McConfig {
 public:
  static constexpr int kDefaultDraws = 100000;

  McConfig(Vector mu, Matrix sigma, int draws = kDefaultDraws, std::uint64_t seed = 0);

  int draws() const { return draws_; }
  std::uint64_t seed() const { return seed_; }
  const Vector& mu() const { return mu_; }
  const Matrix& sigma() const { return sigma_; }
  // Lower Cholesky factor of sigma (after jitter, if any was needed).
  const Matrix& chol() const { return chol_; }
  double log_det() const { return log_det_; }
  double jitter() const { return jitter_; }

  // Per-coefficient L1 weights; zero marks an unpenalized coordinate.
  const Vector& weights() const { return weights_; }
  McConfig& set_weights(Vector w);

 private:
  int draws_;
  std::uint64_t seed_;
  Vector mu_;
  Matrix sigma_;
  Matrix chol_;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
  Vector weights_;
};

/// -1/2 (beta - mu)' sigma^{-1} (beta - mu) - 1/2 log|sigma|, without the 2*pi constant.
double log_density(const Vector& beta, const McConfig& cfg);

/// The draw stream as a p x m matrix; column j is Z_j = mu + L xi_j.
Matrix mc_draws(const McConfig& cfg);

/// Feasible draw (weighted L1 <= s and g <= tol) with the largest log-density, lowest
/// index on ties; nullopt when no draw is feasible. Scoring runs in parallel.
std::optional<Vector> mc_initial_point(const McConfig& cfg, double s, const ConstraintSet& cs,
                                       double feasibility_tol = 1e-9);

/// Single-threaded reference for mc_initial_point.
std::optional<Vector> mc_initial_point_serial(const McConfig& cfg, double s, const ConstraintSet& cs,
                                              double feasibility_tol = 1e-9);

}  // namespace pclasso
