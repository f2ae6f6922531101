#include <limits>
#include <random>

#include <benchmark/benchmark.h>

#include "pclasso/inference.hpp"
#include "pclasso/initializer.hpp"
#include "pclasso/tuning.hpp"

using namespace pclasso;

namespace {

Dataset instance(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix X(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = n01(rng);
  Vector beta = Vector::Zero(p);
  beta[0] = 2.0;
  beta[1] = -1.0;
  Vector y = X * beta;
  for (Eigen::Index i = 0; i < n; ++i) y[i] += n01(rng);
  return make_dataset(X, y);
}

ConstraintSet first_nonneg(int p) {
  ConstraintSet cs(p);
  Vector row = Vector::Zero(p);
  row[0] = -1.0;
  cs.add_inequality(row, 0.0);
  return cs;
}

void cv(benchmark::State& state, bool parallel) {
  const auto data = instance(static_cast<int>(state.range(0)), 6, 1);
  const auto cs = first_nonneg(6);
  const FitSpec spec;
  const Vector grid = make_s_grid(data, cs, 20, spec);
  for (auto _ : state) {
    auto curve = parallel ? cross_validate(data, cs, grid, 10, spec, 3) : cross_validate_serial(data, cs, grid, 10, spec, 3);
    benchmark::DoNotOptimize(curve.pe.data());
  }
}

void boot(benchmark::State& state, bool parallel) {
  const auto data = instance(static_cast<int>(state.range(0)), 4, 2);
  const auto cs = first_nonneg(4);
  FitSpec spec;
  spec.s = 2.0;
  BootstrapOptions opts;
  opts.B = 200;
  opts.seed = 7;
  for (auto _ : state) {
    auto rep = parallel ? bootstrap_se(data, cs, spec, opts) : bootstrap_se_serial(data, cs, spec, opts);
    benchmark::DoNotOptimize(rep.se.data());
  }
}

void mc(benchmark::State& state, bool parallel) {
  const int p = 6;
  ConstraintSet cs(p);
  cs.add_neg_det2(3, 4, 5);
  const McConfig cfg(Vector::Constant(p, -0.3), Matrix::Identity(p, p), static_cast<int>(state.range(0)), 11);
  for (auto _ : state) {
    auto z = parallel ? mc_initial_point(cfg, 4.0, cs) : mc_initial_point_serial(cfg, 4.0, cs);
    benchmark::DoNotOptimize(z);
  }
}

}  // namespace

BENCHMARK_CAPTURE(cv, serial, false)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(cv, parallel, true)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(boot, serial, false)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(boot, parallel, true)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(mc, serial, false)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(mc, parallel, true)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
