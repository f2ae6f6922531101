#include "pclasso/initializer.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <omp.h>

#include "pclasso/error.hpp"

namespace pclasso {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Best {
  double score = kNegInf;
  Eigen::Index index = -1;

  void offer(double s, Eigen::Index j) {
    if (s > score || (s == score && index >= 0 && j < index)) {
      score = s;
      index = j;
    }
  }
};

// Log-density of a feasible draw, or -inf when it violates the budget or constraints.
double score_draw(const McConfig& cfg, const Matrix& draws, Eigen::Index j, double s,
                  const ConstraintSet& cs, double tol) {
  const auto z = draws.col(j);
  if (cfg.weights().dot(z.cwiseAbs()) > s) return kNegInf;
  if (!cs.empty() && !is_feasible(cs, z, tol)) return kNegInf;
  return log_density(z, cfg);
}

}  // namespace

McConfig::McConfig(Vector mu, Matrix sigma, int draws, std::uint64_t seed)
    : draws_(draws), seed_(seed), mu_(std::move(mu)), sigma_(std::move(sigma)) {
  const Eigen::Index p = mu_.size();
  if (draws_ < 1) throw Error(ErrorKind::Usage, "Monte Carlo draw count must be >= 1");
  if (sigma_.rows() != p || sigma_.cols() != p)
    throw Error(ErrorKind::DimensionMismatch, "McConfig: sigma must be p x p");
  if (!mu_.allFinite() || !sigma_.allFinite()) throw Error(ErrorKind::Data, "McConfig: non-finite input");
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  Eigen::LLT<Matrix> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    jitter_ = 1e-10 * sigma_.trace() / static_cast<double>(std::max<Eigen::Index>(p, 1));
    llt.compute(sigma_ + jitter_ * Matrix::Identity(p, p));
    if (llt.info() != Eigen::Success || !(jitter_ > 0.0))
      throw Error(ErrorKind::Data, "McConfig: sigma is not positive definite");
    sigma_.diagonal().array() += jitter_;
  }
  chol_ = llt.matrixL();
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
  weights_ = Vector::Ones(p);
}

McConfig& McConfig::set_weights(Vector w) {
  if (w.size() != mu_.size()) throw Error(ErrorKind::DimensionMismatch, "McConfig: weights length");
  weights_ = std::move(w);
  return *this;
}

double log_density(const Vector& beta, const McConfig& cfg) {
  if (beta.size() != cfg.mu().size()) throw Error(ErrorKind::DimensionMismatch, "log_density: length");
  const Vector v = cfg.chol().triangularView<Eigen::Lower>().solve(beta - cfg.mu());
  return -0.5 * v.squaredNorm() - 0.5 * cfg.log_det();
}

Matrix mc_draws(const McConfig& cfg) {
  const Eigen::Index p = cfg.mu().size();
  std::mt19937_64 rng(cfg.seed());
  std::normal_distribution<double> n01;
  Matrix xi(p, cfg.draws());
  for (Eigen::Index j = 0; j < cfg.draws(); ++j)
    for (Eigen::Index i = 0; i < p; ++i) xi(i, j) = n01(rng);
  Matrix z = cfg.chol().triangularView<Eigen::Lower>() * xi;
  z.colwise() += cfg.mu();
  return z;
}

std::optional<Vector> mc_initial_point_serial(const McConfig& cfg, double s, const ConstraintSet& cs,
                                              double feasibility_tol) {
  if (!(s >= 0.0)) throw Error(ErrorKind::Usage, "budget s must be >= 0");
  const Matrix draws = mc_draws(cfg);
  Best best;
  for (Eigen::Index j = 0; j < draws.cols(); ++j) best.offer(score_draw(cfg, draws, j, s, cs, feasibility_tol), j);
  if (best.index < 0) return std::nullopt;
  return Vector(draws.col(best.index));
}

std::optional<Vector> mc_initial_point(const McConfig& cfg, double s, const ConstraintSet& cs,
                                       double feasibility_tol) {
  if (!(s >= 0.0)) throw Error(ErrorKind::Usage, "budget s must be >= 0");
  const Matrix draws = mc_draws(cfg);
  const Eigen::Index m = draws.cols();
  std::vector<Best> partial(static_cast<size_t>(omp_get_max_threads()));
#pragma omp parallel
  {
    Best local;
#pragma omp for schedule(static)
    for (Eigen::Index j = 0; j < m; ++j) local.offer(score_draw(cfg, draws, j, s, cs, feasibility_tol), j);
    partial[static_cast<size_t>(omp_get_thread_num())] = local;
  }
  Best best;
  for (const auto& b : partial) {
    if (b.index >= 0) best.offer(b.score, b.index);
  }
  if (best.index < 0) return std::nullopt;
  return Vector(draws.col(best.index));
}

}  // namespace pclasso
