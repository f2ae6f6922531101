#include "simulate.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include "pclasso/error.hpp"
#include "report.hpp"

namespace pclasso::cli {

namespace {

struct Rng {
  std::mt19937_64 gen;
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;

  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double normal() { return n01(gen); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(gen); }
};

Scenario demand(std::uint64_t seed, int n) {
  // Double-log electricity demand with quarterly dummies.
  Rng rng(seed);
  if (n <= 0) n = 120;
  Scenario sc;
  sc.name = "demand";
  sc.family = "gaussian";
  sc.response = "log_q";
  sc.beta.resize(6);
  sc.beta << 0.5, 0.0, 0.8, 0.2, -0.1, 0.0;
  sc.intercept = 1.0;
  sc.sigma = 0.3;
  Matrix X(n, 6);
  for (int t = 0; t < n; ++t) {
    X(t, 0) = 0.3 * rng.normal();
    X(t, 1) = 0.4 * rng.normal();
    X(t, 2) = 0.5 * rng.normal();
    for (int q = 0; q < 3; ++q) X(t, 3 + q) = (t % 4 == q) ? 1.0 : 0.0;
  }
  Vector y(n);
  for (int t = 0; t < n; ++t) y[t] = sc.intercept + X.row(t).dot(sc.beta) + sc.sigma * rng.normal();
  sc.data = make_dataset(X, y, {"log_pe", "log_pg", "log_income", "d1", "d2", "d3"});
  sc.constraints =
      "# elasticities are nonnegative\n"
      "lin: 1 0 0 0 0 0 >= 0\n"
      "lin: 0 1 0 0 0 0 >= 0\n"
      "lin: 0 0 1 0 0 0 >= 0\n";
  return sc;
}

Scenario concavity(std::uint64_t seed, int n) {
  // Quadratic response in two inputs; the coefficient file addresses the intercept.
  Rng rng(seed);
  if (n <= 0) n = 200;
  Scenario sc;
  sc.name = "concavity";
  sc.family = "gaussian";
  sc.response = "y";
  sc.beta.resize(5);
  sc.beta << 1.5, 0.0, -1.0, -0.5, 0.3;
  sc.intercept = 2.0;
  sc.sigma = 0.5;
  Matrix X(n, 5);
  for (int i = 0; i < n; ++i) {
    const double x2 = rng.uniform(-1.5, 1.5);
    const double x3 = rng.uniform(-1.5, 1.5);
    X(i, 0) = x2;
    X(i, 1) = x3;
    X(i, 2) = x2 * x2;
    X(i, 3) = x3 * x3;
    X(i, 4) = 2.0 * x2 * x3;
  }
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = sc.intercept + X.row(i).dot(sc.beta) + sc.sigma * rng.normal();
  sc.data = make_dataset(X, y, {"x2", "x3", "x2sq", "x3sq", "x2x3"});
  sc.constraints =
      "# coordinates: 1 = intercept, 2..6 = x2 x3 x2sq x3sq x2x3\n"
      "# concave response: b4 <= 0, b5 <= 0, b4 b5 - b6^2 >= 0\n"
      "nl: negdet 4 5 6\n";
  return sc;
}

Scenario synergy(std::uint64_t seed, int n) {
  // 2 x 5 factorial assay with a logistic link; first levels are the baseline.
  Rng rng(seed);
  const int per_cell = n <= 0 ? 150 : std::max(1, n / 10);
  Scenario sc;
  sc.name = "synergy";
  sc.family = "logistic";
  sc.response = "y";
  sc.beta.resize(9);
  sc.beta << 0.4, 0.3, 0.6, 0.9, 1.2, 0.5, 0.0, 0.8, 0.0;
  sc.intercept = -1.0;
  const int rows = 10 * per_cell;
  Matrix X = Matrix::Zero(rows, 9);
  Vector y(rows);
  int r = 0;
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 5; ++j) {
      for (int u = 0; u < per_cell; ++u, ++r) {
        if (i == 2) X(r, 0) = 1.0;
        if (j >= 2) X(r, j - 1) = 1.0;
        if (i == 2 && j >= 2) X(r, 3 + j) = 1.0;
        const double eta = sc.intercept + X.row(r).dot(sc.beta);
        y[r] = rng.uniform(0.0, 1.0) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
      }
    }
  }
  sc.data = make_dataset(X, y, {"a2", "t2", "t3", "t4", "t5", "e22", "e23", "e24", "e25"});
  sc.constraints =
      "# synergy: interaction effects are nonnegative\n"
      "lin: 0 0 0 0 0 1 0 0 0 >= 0\n"
      "lin: 0 0 0 0 0 0 1 0 0 >= 0\n"
      "lin: 0 0 0 0 0 0 0 1 0 >= 0\n"
      "lin: 0 0 0 0 0 0 0 0 1 >= 0\n";
  return sc;
}

Scenario theorem2(std::uint64_t seed, int n) {
  Rng rng(seed);
  if (n <= 0) n = 50;
  Scenario sc;
  sc.name = "theorem2";
  sc.family = "gaussian";
  sc.response = "y";
  sc.beta.resize(6);
  sc.beta << 2.0, 1.0, 0.0, -1.0, 0.0, 0.5;
  sc.sigma = 1.0;
  Matrix X(n, 6);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 6; ++j) X(i, j) = rng.normal();
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = X.row(i).dot(sc.beta) + sc.sigma * rng.normal();
  sc.data = make_dataset(X, y);
  sc.constraints =
      "lin: 1 0 0 0 0 0 >= 0\n"
      "lin: 0 0 0 1 0 0 <= 0\n";
  return sc;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"demand", "concavity", "synergy", "theorem2"};
  return names;
}

Scenario simulate(const std::string& name, std::uint64_t seed, int n) {
  if (name == "demand") return demand(seed, n);
  if (name == "concavity") return concavity(seed, n);
  if (name == "synergy") return synergy(seed, n);
  if (name == "theorem2") return theorem2(seed, n);
  throw Error(ErrorKind::Usage, "unknown scenario '" + name + "' (expected demand, concavity, synergy or theorem2)");
}

void write_scenario(const Scenario& sc, std::uint64_t seed, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Data, "cannot create directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  write_text_file((base / "data.csv").string(), to_csv(sc.data, sc.response));
  write_text_file((base / "constraints.txt").string(), sc.constraints);
  json truth = {{"scenario", sc.name},
                {"seed", seed},
                {"family", sc.family},
                {"response", sc.response},
                {"n", sc.data.n()},
                {"names", sc.data.column_names},
                {"beta", to_json(sc.beta)},
                {"intercept", sc.intercept}};
  if (sc.family == "gaussian") truth["sigma"] = sc.sigma;
  write_text_file((base / "truth.json").string(), dump_json(truth));
}

}  // namespace pclasso::cli
