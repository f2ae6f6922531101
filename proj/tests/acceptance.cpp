#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pclasso/error.hpp"
#include "pclasso/inference.hpp"
#include "pclasso/lsa_glm.hpp"
#include "pclasso/oracle.hpp"
#include "pclasso/oracle_fixtures.hpp"
#include "pclasso/tuning.hpp"
#include "simulate.hpp"
#include "test_util.hpp"

using namespace pclasso;
using pclasso::testing::normal_matrix;
using pclasso::testing::normal_vector;
using pclasso::testing::uniform_int;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// 1 ---------------------------------------------------------------------------------
Outcome kkt_suite() {
  std::mt19937_64 rng(20240601);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int d = uniform_int(rng, 1, 10);
    const int m = uniform_int(rng, 0, 15);
    const int me = uniform_int(rng, 0, std::max(0, d / 2 - 1));
    Matrix M = normal_matrix(rng, d, d);
    Matrix Q = M.transpose() * M + 0.1 * Matrix::Identity(d, d);
    Vector c = normal_vector(rng, d);
    Matrix A = normal_matrix(rng, m, d);
    Vector b = normal_vector(rng, m).cwiseAbs();
    Matrix E = normal_matrix(rng, me, d);
    Vector e = Vector::Zero(me);
    std::optional<Vector> lb;
    if (trial % 3 == 0) {
      // bounds below zero keep the origin feasible
      Vector l = -Vector::Constant(d, 1.0) - normal_vector(rng, d).cwiseAbs();
      for (int j = 0; j < d; j += 2) l[j] = -kInf;
      lb = l;
    }
    QpProblem qp(Q, c, A, b, E, e, lb);
    const QpSolution sol = solve_qp(qp);
    if (sol.status != QpStatus::Optimal) {
      ++failures;
      continue;
    }
    const double r = kkt_residuals(qp, sol).max();
    worst = std::max(worst, r);
    if (!(r <= 1e-6)) ++failures;
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 10.0,
          std::to_string(500 - failures) + "/500 optimal within tolerance, max residual " + fmt("%.2e", worst) +
              ", " + fmt("%.2f", secs) + " s"};
}

// 2 ---------------------------------------------------------------------------------
Outcome soft_threshold() {
  std::mt19937_64 rng(777);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int p = uniform_int(rng, 1, 8);
    const int n = p + uniform_int(rng, 0, 12);
    Eigen::HouseholderQR<Matrix> qr(normal_matrix(rng, n, p));
    const Matrix X = qr.householderQ() * Matrix::Identity(n, p);
    const Vector y = normal_vector(rng, n) * 2.0;
    const Vector z = X.transpose() * y;
    std::vector<char> nonneg(static_cast<size_t>(p), 0);
    ConstraintSet cs(p);
    for (int j = 0; j < p; ++j) {
      if (uniform_int(rng, 0, 2) == 0) {
        nonneg[static_cast<size_t>(j)] = 1;
        Vector row = Vector::Zero(p);
        row[j] = -1.0;
        cs.add_inequality(row, 0.0);
      }
    }
    const double s = uniform(rng, 0.05, 1.2) * z.lpNorm<1>();
    FitSpec spec;
    spec.s = s;
    spec.intercept = false;
    const FitResult fit = fit_constrained(make_dataset(X, y), cs, spec);
    const Vector expected = oracle::soft_threshold_budget(z, s, nonneg);
    worst = std::max(worst, (fit.beta - expected).lpNorm<Eigen::Infinity>());
  }
  return {worst <= 1e-8, "100 instances, max |beta - closed form| " + fmt("%.2e", worst)};
}

// 3 ---------------------------------------------------------------------------------
Outcome brute_force() {
  const auto cases = oracle::load_bruteforce_fixtures(std::string(PCLASSO_FIXTURE_DIR) + "/bruteforce.json");
  double worst_obj = -kInf;
  double worst_beta = 0.0;
  int bad = 0;
  for (const auto& c : cases) {
    const ConstraintSet cs = parse_constraints(c.constraints_text, static_cast<int>(c.data.p()));
    FitSpec spec;
    spec.s = c.s;
    spec.intercept = c.intercept;
    const FitResult fit = fit_constrained(c.data, cs, spec);
    const double gap = fit.objective - c.grid_fit.objective;
    const double db = (fit.beta - c.polished.beta).lpNorm<Eigen::Infinity>();
    worst_obj = std::max(worst_obj, gap);
    worst_beta = std::max(worst_beta, db);
    if (!(gap <= 1e-4) || !(db <= 1e-3)) ++bad;
  }
  const bool pass = cases.size() == 50 && bad == 0;
  return {pass, std::to_string(cases.size()) + " fixtures, max objective - grid optimum " + fmt("%.2e", worst_obj) +
                    ", max |beta - polished| " + fmt("%.2e", worst_beta)};
}

// 4 ---------------------------------------------------------------------------------
Outcome inactive_constraints() {
  std::mt19937_64 rng(4242);
  int used = 0;
  int skipped = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; used < 200 && seed < 5000; ++seed) {
    const cli::Scenario sc = cli::simulate("theorem2", seed, 50);
    const ConstraintSet cs = parse_constraints(sc.constraints, 6);
    FitSpec spec;
    spec.s = uniform(rng, 0.2, 1.0) * ols(sc.data, true).second.lpNorm<1>();
    const FitResult free_fit = fit_constrained(sc.data, ConstraintSet(6), spec);
    if (!is_feasible(cs, free_fit.beta, 0.0)) {
      ++skipped;
      continue;
    }
    const FitResult fit = fit_constrained(sc.data, cs, spec);
    worst = std::max(worst, (fit.beta - free_fit.beta).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, std::abs(fit.intercept - free_fit.intercept));
    ++used;
  }
  return {used == 200 && worst <= 1e-6, std::to_string(used) + " instances (" + std::to_string(skipped) +
                                            " draws skipped as infeasible), max difference " + fmt("%.2e", worst)};
}

// 5 ---------------------------------------------------------------------------------
Outcome loo_identity() {
  std::mt19937_64 rng(55);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = uniform_int(rng, 12, 50);
    const int p = uniform_int(rng, 2, 5);
    const Matrix X = normal_matrix(rng, n, p);
    Vector beta = normal_vector(rng, p);
    beta[p - 1] = 0.0;
    const Dataset data = make_dataset(X, X * beta + normal_vector(rng, n));
    ConstraintSet cs(p);
    Vector row = Vector::Zero(p);
    row[0] = beta[0] >= 0 ? -1.0 : 1.0;
    cs.add_inequality(row, 0.0);
    FitSpec spec;
    spec.intercept = trial % 2 == 0;
    const Vector grid = make_s_grid(data, cs, uniform_int(rng, 5, 20), spec);
    const TuningCurve curve = cross_validate(data, cs, grid, n, spec, 0);
    const Vector naive = oracle::naive_loo_cv(data, grid, [&](const Dataset& train, double s) {
      FitSpec local = spec;
      local.s = s;
      const FitResult fit = fit_constrained(train, cs, local);
      return std::make_pair(fit.intercept, Vector(fit.beta));
    });
    worst = std::max(worst, (curve.pe - naive).lpNorm<Eigen::Infinity>());
  }
  return {worst <= 1e-10, "10 instances, max |PE - naive| " + fmt("%.2e", worst)};
}

// 6 ---------------------------------------------------------------------------------
struct DfFixture {
  std::vector<double> beta;
  const char* constraints;
  int expected;
};

Outcome df_fixtures() {
  // Counts done by hand: p - zeros - active rows (equalities once), floored at 0.
  const std::vector<DfFixture> fx = {
      {{1, 2, 3}, "", 3},
      {{1, 0, 3}, "", 2},
      {{0, 0, 0}, "", 0},
      {{1, 2, 3}, "lin: 1 0 0 <= 1", 2},
      {{1, 2, 3}, "lin: 1 0 0 <= 2", 3},
      {{1, 2, 3}, "lin: 1 1 0 <= 3\nlin: 0 0 1 >= 3", 1},
      {{1, 2, 3}, "lin: 1 1 1 = 6", 2},
      {{1, 2, 3}, "lin: 1 1 1 = 6\nlin: 1 0 0 <= 1", 1},
      {{0, 2, 3}, "lin: -1 0 0 <= 0", 1},
      {{0, 0, 3}, "lin: -1 0 0 <= 0\nlin: 0 -1 0 <= 0", 0},
      {{0, 0, 0}, "lin: -1 0 0 <= 0\nlin: 0 -1 0 <= 0\nlin: 0 0 -1 <= 0", 0},
      {{0, 0, 1}, "lin: 0 0 1 <= 1\nlin: 1 0 0 = 0", 0},
      {{2, -1, 0, 0}, "lin: 1 0 0 0 >= 0\nlin: 0 0 0 1 <= 0", 1},
      {{2, -1, 0, 0}, "lin: 1 1 0 0 = 1", 1},
      {{2, -1, 0, 0}, "lin: 1 1 0 0 = 1\nlin: 1 0 0 0 <= 2", 0},
      {{2, -1, 0.5, 0}, "lin: 1 0 0 0 <= 2\nlin: 0 1 0 0 >= -1", 1},
      {{2, -1, 0.5, 0}, "lin: 1 0 0 0 <= 3\nlin: 0 1 0 0 >= -2", 3},
      {{2, -1, 0.5, 0}, "lin: 1 2 0 0 = 0\nlin: 0 0 2 0 = 1", 1},
      {{1, 1, 1, 1, 1}, "lin: 1 -1 0 0 0 = 0\nlin: 0 1 -1 0 0 = 0\nlin: 0 0 1 -1 0 = 0\nlin: 0 0 0 1 -1 = 0", 1},
      {{1, 1, 1, 1, 1}, "lin: 1 1 1 1 1 <= 5\nlin: 1 1 1 1 1 >= 5", 3},
      {{1, 0, 0, 0, 0}, "lin: 1 1 1 1 1 <= 1", 0},
      {{1, 0, 0, 0, 1}, "lin: 1 1 1 1 1 <= 1.5", 2},
      {{3, 0, 0, -1, -0.25, 0.5}, "nl: negdet 4 5 6", 3},
      {{3, 0, 0, -1, -0.25, 0.5}, "nl: negdet 4 5 6\nlin: 1 0 0 0 0 0 <= 3", 2},
      {{3, 0, 0, -1, -1, 0.5}, "nl: negdet 4 5 6", 4},
  };
  int bad = 0;
  std::string first_bad;
  for (size_t i = 0; i < fx.size(); ++i) {
    const auto& f = fx[i];
    const Vector beta = Eigen::Map<const Vector>(f.beta.data(), static_cast<Eigen::Index>(f.beta.size()));
    const ConstraintSet cs = parse_constraints(f.constraints, static_cast<int>(beta.size()));
    FitResult fit;
    fit.beta = beta;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      if (beta[j] == 0.0) fit.zero_set.push_back(static_cast<int>(j));
    const int got = degrees_of_freedom(fit, cs, 1e-9);
    const int counted = oracle::counted_df(beta, cs, 1e-9);
    if (got != f.expected || counted != f.expected) {
      if (bad++ == 0)
        first_bad = " (fixture " + std::to_string(i) + ": df " + std::to_string(got) + ", oracle " +
                    std::to_string(counted) + ", hand " + std::to_string(f.expected) + ")";
    }
  }
  return {fx.size() == 25 && bad == 0,
          std::to_string(fx.size() - static_cast<size_t>(bad)) + "/" + std::to_string(fx.size()) + " agree" + first_bad};
}

// 7 ---------------------------------------------------------------------------------
Outcome lsa_exactness() {
  std::mt19937_64 rng(70);
  double worst_g = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int p = uniform_int(rng, 2, 6);
    const int n = uniform_int(rng, 3 * p, 80);
    const Matrix X = normal_matrix(rng, n, p);
    const Vector beta = normal_vector(rng, p);
    const Dataset data = make_dataset(X, X * beta + 0.7 * normal_vector(rng, n));
    ConstraintSet cs(p);
    Vector row = Vector::Zero(p);
    row[trial % p] = 1.0;
    cs.add_inequality(row, 0.0);
    FitSpec spec;
    spec.intercept = trial % 3 != 0;
    spec.s = uniform(rng, 0.2, 1.0) * ols(data, spec.intercept).second.lpNorm<1>();
    const FitResult direct = fit_constrained(data, cs, spec);
    LsaOptions lo;
    lo.intercept = spec.intercept;
    const FitResult lsa = fit_lsa_constrained(fit_unpenalized(Family::Gaussian, data, lo), cs, spec);
    worst_g = std::max(worst_g, (direct.beta - lsa.beta).lpNorm<Eigen::Infinity>());
    worst_g = std::max(worst_g, std::abs(direct.intercept - lsa.intercept));
  }
  const auto cases = oracle::load_logistic_fixtures(std::string(PCLASSO_FIXTURE_DIR) + "/logistic.json");
  double worst_l = 0.0;
  for (const auto& c : cases) {
    LsaOptions lo;
    lo.intercept = c.intercept;
    const LsaSurrogate s = fit_unpenalized(Family::Logistic, c.data, lo);
    worst_l = std::max(worst_l, (s.beta_tilde - c.beta_tilde).lpNorm<Eigen::Infinity>());
  }
  return {worst_g <= 1e-8 && !cases.empty() && worst_l <= 1e-8,
          "gaussian 50 instances max diff " + fmt("%.2e", worst_g) + ", logistic " + std::to_string(cases.size()) +
              " fixtures max diff " + fmt("%.2e", worst_l)};
}

// 8 ---------------------------------------------------------------------------------
Outcome bootstrap_calibration() {
  std::mt19937_64 rng(808);
  const int n = 200;
  const Matrix X = normal_matrix(rng, n, 3);
  Vector beta(3);
  beta << 1.0, -0.5, 0.25;
  const Dataset data = make_dataset(X, ((X * beta + normal_vector(rng, n)).array() + 0.5).matrix());
  const auto t0 = Clock::now();
  BootstrapOptions opts;
  opts.B = 500;
  opts.seed = 2024;
  opts.mode = BootstrapMode::FixedS;
  FitSpec spec;
  spec.s = kInf;
  const BootstrapReport rep = bootstrap_se(data, ConstraintSet(3), spec, opts);
  const double secs = seconds_since(t0);

  const auto [a, b] = ols(data, true);
  const Vector resid = data.y - X * b - Vector::Constant(n, a);
  const double sigma2 = resid.squaredNorm() / (n - 4);
  const Matrix Xc = X.rowwise() - X.colwise().mean();
  const Vector analytic = (sigma2 * (Xc.transpose() * Xc).inverse()).diagonal().cwiseSqrt();
  const double worst = (rep.se.array() / analytic.array() - 1.0).abs().maxCoeff();
  return {worst <= 0.15 && rep.failures == 0 && secs < 60.0,
          "max relative SE error " + fmt("%.3f", worst) + ", " + std::to_string(rep.failures) + " failures, " +
              fmt("%.2f", secs) + " s"};
}

// 9 ---------------------------------------------------------------------------------
Outcome mc_initializer() {
  std::mt19937_64 rng(909);
  int bad = 0;
  int feasible_found = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const int p = trial < 3 ? 3 : 6;
    Matrix M = normal_matrix(rng, p, p);
    const Matrix sigma = M * M.transpose() / p + 0.2 * Matrix::Identity(p, p);
    const Vector mu = normal_vector(rng, p);
    ConstraintSet cs(p);
    if (p == 6) {
      cs.add_neg_det2(3, 4, 5);
    } else {
      Vector row = Vector::Zero(p);
      row[0] = -1.0;
      cs.add_inequality(row, 0.0);
    }
    const double s = 0.8 * mu.lpNorm<1>() + 0.5;
    const int m = trial % 2 == 0 ? 10000 : 3000;
    const McConfig cfg(mu, sigma, m, 100 + static_cast<std::uint64_t>(trial));
    const auto z1 = mc_initial_point(cfg, s, cs);
    const auto z2 = mc_initial_point(cfg, s, cs);
    const auto zs = mc_initial_point_serial(cfg, s, cs);
    if (z1.has_value() != z2.has_value() || z1.has_value() != zs.has_value()) {
      ++bad;
      continue;
    }
    if (z1 && (*z1 != *z2 || *z1 != *zs)) ++bad;

    // independent rescan: dense inverse, plain feasibility check
    const Matrix draws = mc_draws(cfg);
    const Matrix Si = cfg.sigma().inverse();
    double best = kInf;
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < draws.cols(); ++j) {
      const Vector zj = draws.col(j);
      if (!oracle::oracle_feasible(cs, zj, s, Vector::Ones(p), 1e-9)) continue;
      const Vector d = zj - mu;
      const double q = d.dot(Si * d);
      if (q < best) {
        best = q;
        arg = j;
      }
    }
    if ((arg >= 0) != z1.has_value()) {
      ++bad;
      continue;
    }
    if (arg < 0) continue;
    ++feasible_found;
    if (!oracle::oracle_feasible(cs, *z1, s, Vector::Ones(p), 1e-9)) ++bad;
    const Vector d1 = *z1 - mu;
    if (*z1 != draws.col(arg) && std::abs(d1.dot(Si * d1) - best) > 1e-9 * std::max(1.0, best)) ++bad;
  }
  return {bad == 0 && feasible_found >= 4,
          "6 configurations (" + std::to_string(feasible_found) + " with feasible draws), " + std::to_string(bad) +
              " mismatches"};
}

// 10 --------------------------------------------------------------------------------
Outcome asymptotics() {
  const int n = 2000;
  const int reps = 300;
  Matrix C(3, 3);
  C << 1.0, 0.4, 0.1, 0.4, 1.0, -0.3, 0.1, -0.3, 1.5;
  const Matrix L = Eigen::LLT<Matrix>(C).matrixL();
  Vector beta(3);
  beta << 1.0, 0.0, -2.0;
  const double sigma = 1.3;
  const auto t0 = Clock::now();
  Matrix draws(reps, 3);
  for (int r = 0; r < reps; ++r) {
    std::mt19937_64 rng(50000 + static_cast<std::uint64_t>(r));
    const Matrix X = normal_matrix(rng, n, 3) * L.transpose();
    const Dataset data = make_dataset(X, ((X * beta + sigma * normal_vector(rng, n)).array() + 0.7).matrix());
    FitSpec spec;
    spec.s = kInf;
    const FitResult fit = fit_constrained(data, ConstraintSet(3), spec);
    draws.row(r) = std::sqrt(static_cast<double>(n)) * (fit.beta - beta).transpose();
  }
  const double secs = seconds_since(t0);
  const Matrix centered = draws.rowwise() - draws.colwise().mean();
  const Matrix S = centered.transpose() * centered / (reps - 1);
  const Matrix target = sigma * sigma * C.inverse();
  const double rel = (S - target).norm() / target.norm();
  return {rel <= 0.20 && secs < 120.0, "relative Frobenius distance " + fmt("%.3f", rel) + ", " + fmt("%.2f", secs) + " s"};
}

// 11 --------------------------------------------------------------------------------
std::string slurp(const std::string& path) {
  try {
    return read_text_file(path);
  } catch (const Error&) {
    return {};
  }
}

std::string q(const std::string& s) { return "'" + s + "'"; }

struct Pipeline {
  std::string scenario;
  std::string response;
  std::string tune_flags;
  std::string extra;  // passed to tune, fit and bootstrap
};

// Runs simulate -> tune -> fit -> bootstrap; returns the concatenated outputs or an error.
std::optional<std::string> run_pipeline(const std::string& exe, const Pipeline& p, const std::string& dir,
                                        std::string& why) {
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string data = dir + "/data.csv";
  const std::string cons = dir + "/constraints.txt";
  const std::string common = " --data " + q(data) + " --response " + p.response + " --constraints " + q(cons) + " " + p.extra;
  const auto sh = [&](const std::string& cmd, const std::string& step) {
    const int rc = std::system((q(exe) + " " + cmd + " 2>" + q(dir + "/" + step + ".err")).c_str());
    if (rc != 0) why = step + " exited with status " + std::to_string(rc) + ": " + slurp(dir + "/" + step + ".err");
    return rc == 0;
  };
  if (!sh("simulate --scenario " + p.scenario + " --seed 11 --out " + q(dir) + " > " + q(dir + "/simulate.json"), "simulate"))
    return std::nullopt;
  if (!sh("tune" + common + " " + p.tune_flags + " --out " + q(dir + "/tune.json"), "tune")) return std::nullopt;
  nlohmann::json tuned;
  try {
    tuned = nlohmann::json::parse(slurp(dir + "/tune.json"));
  } catch (const std::exception& e) {
    why = std::string("tune report is not JSON: ") + e.what();
    return std::nullopt;
  }
  const double s = tuned.at("tuning").at("selected_s").get<double>();
  char sbuf[64];
  std::snprintf(sbuf, sizeof(sbuf), "%.17g", s);
  if (!sh("fit" + common + " --s " + sbuf + " --out " + q(dir + "/fit.json"), "fit")) return std::nullopt;
  const auto fitted = nlohmann::json::parse(slurp(dir + "/fit.json"));
  const auto b1 = fitted.at("fit").at("beta").get<std::vector<double>>();
  const auto b2 = tuned.at("fit").at("beta").get<std::vector<double>>();
  if (b1 != b2) {
    why = "fit at the selected s differs from the fit inside the tune report";
    return std::nullopt;
  }
  if (!sh("bootstrap" + common + " --s " + sbuf + " --B 40 --out " + q(dir + "/bootstrap.json"), "bootstrap"))
    return std::nullopt;
  std::string all;
  for (const char* f : {"simulate.json", "data.csv", "constraints.txt", "truth.json", "tune.json", "fit.json",
                        "bootstrap.json"})
    all += std::string(f) + "\n" + slurp(dir + "/" + f);
  return all;
}

Outcome end_to_end(const std::string& exe) {
  if (exe.empty()) return {false, "no pclasso binary given"};
  const std::vector<Pipeline> pipelines = {
      {"demand", "log_q", "--criterion cv --folds 5 --grid 12", "--seed 3"},
      {"concavity", "y", "--criterion cv --folds 5 --grid 8", "--mc-init 2000,1 --seed 3"},
      {"synergy", "y", "--criterion bic --grid 12", "--family logistic --seed 3"},
  };
  const std::string root = (std::filesystem::temp_directory_path() / "pclasso_e2e").string();
  std::string detail;
  bool pass = true;
  for (const auto& p : pipelines) {
    const std::string dir = root + "/" + p.scenario;
    std::string why;
    const auto first = run_pipeline(exe, p, dir, why);
    const auto second = first ? run_pipeline(exe, p, dir, why) : std::nullopt;
    std::string verdict;
    if (!first || !second) {
      pass = false;
      verdict = "failed (" + why + ")";
    } else if (*first != *second) {
      pass = false;
      verdict = "reports differ between runs";
    } else {
      verdict = "ok";
    }
    detail += (detail.empty() ? "" : ", ") + p.scenario + " " + verdict;
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string exe = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"KKT suite", kkt_suite},
      {"soft-threshold oracle", soft_threshold},
      {"brute-force equivalence", brute_force},
      {"inactive constraints leave the lasso unchanged", inactive_constraints},
      {"leave-one-out identity", loo_identity},
      {"degrees of freedom", df_fixtures},
      {"least-squares approximation", lsa_exactness},
      {"bootstrap calibration", bootstrap_calibration},
      {"Monte Carlo initializer", mc_initializer},
      {"asymptotic covariance", asymptotics},
      {"end-to-end pipelines", [&] { return end_to_end(exe); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
