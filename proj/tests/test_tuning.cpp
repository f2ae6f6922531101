#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "pclasso/error.hpp"
#include "pclasso/oracle.hpp"
#include "pclasso/tuning.hpp"
#include "test_util.hpp"

using namespace pclasso;
using pclasso::testing::normal_matrix;
using pclasso::testing::normal_vector;

namespace {

FitSpec no_intercept() {
  FitSpec spec;
  spec.intercept = false;
  return spec;
}

Dataset sparse_instance(std::uint64_t seed, int n, int p) {
  std::mt19937_64 rng(seed);
  Matrix X = normal_matrix(rng, n, p);
  Vector beta = Vector::Zero(p);
  beta[0] = 2.0;
  beta[1] = 1.5;
  return make_dataset(X, X * beta + normal_vector(rng, n));
}

ConstraintSet first_two_nonneg(int p) {
  ConstraintSet cs(p);
  for (int j = 0; j < 2; ++j) {
    Vector row = Vector::Zero(p);
    row[j] = -1.0;
    cs.add_inequality(row, 0.0);
  }
  return cs;
}

}  // namespace

TEST_CASE("s grid") {
  Vector y(2);
  y << 2, -1;
  auto data = make_dataset(Matrix::Identity(2, 2), y);
  auto g4 = make_s_grid(data, ConstraintSet(2), 4, no_intercept());
  REQUIRE(g4.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(g4[i] == doctest::Approx(i).epsilon(1e-12));
  auto g2 = make_s_grid(data, ConstraintSet(2), 2, no_intercept());
  CHECK(g2[0] == 0.0);
  CHECK(g2[1] == doctest::Approx(3.0));

  ConstraintSet cs(2);
  Vector row(2);
  row << 0, -1;
  cs.add_inequality(row, 0.0);
  auto gc = make_s_grid(data, cs, 5, no_intercept());
  CHECK(gc[4] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_THROWS_AS(make_s_grid(data, cs, 1, no_intercept()), Error);
}

TEST_CASE("leave-one-out on a mean-only model") {
  Matrix X = Matrix::Ones(3, 1);
  Vector y(3);
  y << 1, 2, 3;
  auto data = make_dataset(X, y);
  Vector grid(1);
  grid << 100.0;
  auto curve = cross_validate(data, ConstraintSet(1), grid, 3, no_intercept(), 0);
  CHECK(curve.pe[0] == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(curve.selected_s == 100.0);
  CHECK(curve.selected_index == 0);
}

TEST_CASE("cross-validation matches the naive double loop") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto data = sparse_instance(seed, 20, 4);
    auto cs = first_two_nonneg(4);
    FitSpec spec;
    const Vector grid = make_s_grid(data, cs, 8, spec);
    auto curve = cross_validate(data, cs, grid, static_cast<int>(data.n()), spec, 0);
    auto naive = oracle::naive_loo_cv(data, grid, [&](const Dataset& train, double s) {
      FitSpec local = spec;
      local.s = s;
      auto fit = fit_constrained(train, cs, local);
      return std::make_pair(fit.intercept, Vector(fit.beta));
    });
    for (Eigen::Index i = 0; i < grid.size(); ++i) CHECK(std::abs(curve.pe[i] - naive[i]) <= 1e-10);

    auto serial = cross_validate_serial(data, cs, grid, static_cast<int>(data.n()), spec, 0);
    CHECK(serial.pe == curve.pe);
    CHECK(serial.selected_index == curve.selected_index);
  }
}

TEST_CASE("k-fold assignment") {
  auto folds = make_folds(10, 3, 77);
  REQUIRE(folds.size() == 3);
  std::vector<int> all;
  for (const auto& f : folds) {
    CHECK(f.size() >= 3);
    CHECK(f.size() <= 4);
    all.insert(all.end(), f.begin(), f.end());
  }
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 10; ++i) CHECK(all[static_cast<size_t>(i)] == i);
  CHECK(make_folds(10, 3, 77) == folds);
  CHECK(make_folds(10, 3, 78) != folds);
  CHECK_THROWS_AS(make_folds(10, 1, 0), Error);
  CHECK_THROWS_AS(make_folds(10, 11, 0), Error);

  auto data = sparse_instance(9, 30, 3);
  FitSpec spec;
  const Vector grid = make_s_grid(data, ConstraintSet(3), 6, spec);
  auto a = cross_validate(data, ConstraintSet(3), grid, 5, spec, 123);
  auto b = cross_validate(data, ConstraintSet(3), grid, 5, spec, 123);
  CHECK(a.pe == b.pe);
  CHECK(a.folds == 5);
}

TEST_CASE("appending a worse grid point keeps the selection") {
  auto data = sparse_instance(4, 25, 3);
  FitSpec spec;
  Vector grid = make_s_grid(data, ConstraintSet(3), 6, spec);
  auto base = cross_validate(data, ConstraintSet(3), grid, 5, spec, 1);
  Vector longer(grid.size() + 1);
  longer << grid, grid[grid.size() - 1] * 3.0;
  auto more = cross_validate(data, ConstraintSet(3), longer, 5, spec, 1);
  if (more.pe[longer.size() - 1] > base.pe[base.selected_index]) CHECK(more.selected_s == base.selected_s);
}

TEST_CASE("information criteria") {
  std::mt19937_64 rng(2);
  Matrix X = normal_matrix(rng, 12, 3);
  Vector y = normal_vector(rng, 12);
  auto data = make_dataset(X, y);
  Vector grid(1);
  grid << 0.0;
  auto gcv = gcv_curve(data, ConstraintSet(3), grid, no_intercept());
  CHECK(gcv.pe[0] == doctest::Approx(y.squaredNorm() / 12.0).epsilon(1e-12));
  auto bic = bic_curve(data, ConstraintSet(3), grid, no_intercept());
  CHECK(bic.pe[0] == doctest::Approx(12.0 * std::log(y.squaredNorm() / 12.0)).epsilon(1e-12));

  SUBCASE("orthonormal design with two nonzero coefficients") {
    Matrix Q = Matrix::Identity(6, 3);
    Vector yy(6);
    yy << 3, 2, 0.1, 0.5, -0.2, 0.3;
    auto d = make_dataset(Q, yy);
    Vector g(1);
    g << 2.5;  // soft threshold at 0.25: (2.75, 1.75, 0)... budget 2.5 -> (1.75, 0.75, 0)
    auto curve = gcv_curve(d, ConstraintSet(3), g, no_intercept());
    FitSpec spec = no_intercept();
    spec.s = 2.5;
    auto fit = fit_constrained(d, ConstraintSet(3), spec);
    REQUIRE(fit.df == 2);
    CHECK(curve.pe[0] == doctest::Approx(fit.objective / (6.0 * std::pow(1.0 - 2.0 / 6.0, 2))).epsilon(1e-12));
  }

  SUBCASE("equal loss prefers fewer degrees of freedom") {
    Vector g(2);
    g << 1.0, 2.0;
    auto curve = information_curve(g, 50, Criterion::BIC, [](double s) { return LossAndDf{10.0, s < 1.5 ? 3 : 2}; });
    CHECK(curve.selected_s == 2.0);
    auto tie = information_curve(g, 50, Criterion::BIC, [](double) { return LossAndDf{10.0, 2}; });
    CHECK(tie.selected_s == 1.0);
  }

  SUBCASE("invalid points") {
    Vector g(2);
    g << 1.0, 2.0;
    auto curve = information_curve(g, 5, Criterion::GCV, [](double s) { return LossAndDf{1.0, s < 1.5 ? 5 : 1}; });
    CHECK_FALSE(curve.valid[0]);
    CHECK(curve.selected_index == 1);
    CHECK_THROWS_AS(information_curve(g, 5, Criterion::BIC, [](double) { return LossAndDf{0.0, 1}; }), Error);
  }
}

TEST_CASE("BIC keeps the true support") {
  auto data = sparse_instance(2024, 100, 6);
  auto cs = first_two_nonneg(6);
  FitSpec spec;
  auto curve = bic_curve(data, cs, make_s_grid(data, cs, 30, spec), spec);
  spec.s = curve.selected_s;
  auto fit = fit_constrained(data, cs, spec);
  CHECK(std::find(fit.zero_set.begin(), fit.zero_set.end(), 0) == fit.zero_set.end());
  CHECK(std::find(fit.zero_set.begin(), fit.zero_set.end(), 1) == fit.zero_set.end());
}

TEST_CASE("strong signal selects the full budget") {
  auto data = sparse_instance(7, 40, 3);
  auto cs = first_two_nonneg(3);
  FitSpec spec;
  Vector full = make_s_grid(data, cs, 2, spec);
  auto curve = cross_validate(data, cs, full, static_cast<int>(data.n()), spec, 0);
  CHECK(curve.selected_index == 1);
}

TEST_CASE("tune dispatch and failures") {
  auto data = sparse_instance(3, 15, 2);
  TuneOptions opts;
  opts.grid_count = 5;
  auto cv = tune(data, ConstraintSet(2), FitSpec{}, opts);
  CHECK(cv.folds == 15);
  opts.criterion = Criterion::GCV;
  CHECK(tune(data, ConstraintSet(2), FitSpec{}, opts).criterion == Criterion::GCV);
  CHECK(parse_criterion("bic") == Criterion::BIC);
  CHECK_THROWS_AS(parse_criterion("aic"), Error);
  Vector grid(2);
  grid << 1.0, 0.5;
  CHECK_THROWS_AS(cross_validate(data, ConstraintSet(2), grid, 3, FitSpec{}, 0), Error);
  CHECK_THROWS_AS(cross_validate(data, ConstraintSet(2), Vector(0), 3, FitSpec{}, 0), Error);
}
