#include "cli.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pclasso/error.hpp"
#include "pclasso/inference.hpp"
#include "pclasso/lsa_glm.hpp"
#include "pclasso/oracle_fixtures.hpp"
#include "report.hpp"
#include "simulate.hpp"

#ifndef PCLASSO_VERSION
#define PCLASSO_VERSION "0.0.0"
#endif

namespace pclasso::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Common {
  std::string data;
  std::string response = "y";
  std::string constraints;
  std::string out;
  double tol = 1e-6;
  std::optional<std::uint64_t> seed;
  std::string mc_init;
  std::string family = "gaussian";
  bool no_intercept = false;
  bool no_standardize = false;
  bool timing = false;
};

struct Options {
  Common c;
  std::string s = "inf";
  std::string weights;
  std::string lambda1;
  std::string lambda2;
  int grid = 50;
  int folds = 0;
  std::string criterion = "cv";
  std::string curve_csv;
  int B = 500;
  std::string mode = "fixed";
  std::string surrogate;
  std::string scenario;
  int n = 0;
  std::string kind;
  int count = 1;
};

Error usage(const std::string& msg) { return Error(ErrorKind::Usage, msg); }

double parse_double(const std::string& text, const std::string& what) {
  if (text == "inf" || text == "Inf" || text == "+inf") return kInf;
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (text.empty() || ec != std::errc() || ptr != e || std::isnan(v))
    throw usage(what + ": '" + text + "' is not a number");
  return v;
}

Vector parse_list(const std::string& text, const std::string& what) {
  std::vector<double> v;
  size_t start = 0;
  while (true) {
    const size_t comma = text.find(',', start);
    v.push_back(parse_double(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start), what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Inputs {
  Dataset data;
  ConstraintSet cs;
  std::string data_text;
  std::string constraints_text;
};

Inputs load(const Common& c, bool need_data = true) {
  Inputs in;
  if (need_data) {
    if (c.data.empty()) throw usage("--data is required");
    in.data_text = read_text_file(c.data);
    in.data = parse_csv(in.data_text, c.response);
  }
  const int p = static_cast<int>(in.data.p());
  if (!c.constraints.empty()) {
    in.constraints_text = read_text_file(c.constraints);
    const int dim = need_data ? infer_constraint_dimension(in.constraints_text, p) : -1;
    in.cs = parse_constraints(in.constraints_text, dim);
  } else {
    in.cs = ConstraintSet(p);
  }
  return in;
}

FitSpec make_spec(const Options& o, const ConstraintSet& cs) {
  FitSpec spec;
  spec.s = parse_double(o.s, "--s");
  spec.sparsity_tol = o.c.tol;
  spec.intercept = !o.c.no_intercept;
  spec.standardize = !o.c.no_standardize;
  if (!o.weights.empty()) spec.weights = parse_list(o.weights, "--weights");
  if (!o.c.mc_init.empty()) {
    const auto comma = o.c.mc_init.find(',');
    if (comma == std::string::npos) throw usage("--mc-init expects m,seed");
    const double m = parse_double(o.c.mc_init.substr(0, comma), "--mc-init m");
    const double sd = parse_double(o.c.mc_init.substr(comma + 1), "--mc-init seed");
    if (!(m >= 1) || m != std::floor(m) || !(sd >= 0) || sd != std::floor(sd)) throw usage("--mc-init expects integers m,seed");
    spec.mc_draws = static_cast<int>(m);
    spec.mc_seed = static_cast<std::uint64_t>(sd);
  } else if (cs.has_nonlinear()) {
    if (!o.c.seed) throw usage("nonlinear constraints need --mc-init m,seed or --seed");
    spec.mc_seed = *o.c.seed;
  }
  return spec;
}

std::uint64_t require_seed(const Common& c, const std::string& cmd) {
  if (!c.seed) throw usage(cmd + " needs --seed");
  return *c.seed;
}

Family family_of(const Common& c) {
  const Family f = parse_family(c.family);
  if (f == Family::External) throw usage("--family must be gaussian or logistic");
  return f;
}

json provenance(const Options& o, const Inputs& in, const std::string& surrogate_text = {}) {
  json p = {{"version", PCLASSO_VERSION}};
  if (!in.data_text.empty()) p["data_sha256"] = sha256_hex(in.data_text);
  if (!in.constraints_text.empty()) p["constraints_sha256"] = sha256_hex(in.constraints_text);
  if (!surrogate_text.empty()) p["surrogate_sha256"] = sha256_hex(surrogate_text);
  p["seed"] = o.c.seed ? json(*o.c.seed) : json(nullptr);
  return p;
}

json config(const std::string& cmd, const Options& o) {
  json c = {{"data", o.c.data},
            {"response", o.c.response},
            {"constraints", o.c.constraints},
            {"tol", o.c.tol},
            {"family", o.c.family},
            {"intercept", !o.c.no_intercept},
            {"standardize", !o.c.no_standardize},
            {"mc_init", o.c.mc_init}};
  if (o.c.seed) c["seed"] = *o.c.seed;
  if (cmd == "fit" || cmd == "bootstrap" || cmd == "lsa-fit") c["s"] = o.s;
  if (cmd == "fit") {
    c["weights"] = o.weights;
    c["lambda1"] = o.lambda1;
    c["lambda2"] = o.lambda2;
  }
  if (cmd == "tune" || (cmd == "bootstrap" && o.mode == "retune") || cmd == "lsa-fit") {
    c["grid"] = o.grid;
    c["folds"] = o.folds;
    c["criterion"] = o.criterion;
  }
  if (cmd == "bootstrap") {
    c["B"] = o.B;
    c["mode"] = o.mode;
  }
  if (cmd == "lsa-fit") c["surrogate"] = o.surrogate;
  return c;
}

int folds_for(const Options& o, const Dataset& data) { return o.folds == 0 ? static_cast<int>(data.n()) : o.folds; }

json cmd_fit(const Options& o) {
  const Inputs in = load(o.c);
  const FitSpec spec = make_spec(o, in.cs);
  json r = {{"command", "fit"}, {"config", config("fit", o)}, {"provenance", provenance(o, in)}};
  if (family_of(o.c) == Family::Logistic) {
    if (!o.lambda1.empty()) throw usage("--lambda1 is only available for the gaussian family");
    LsaOptions lo;
    lo.intercept = spec.intercept;
    const LsaSurrogate s = fit_unpenalized(Family::Logistic, in.data, lo);
    r["surrogate"] = to_json(s);
    r["fit"] = to_json(fit_lsa_constrained(s, in.cs, spec), in.data.column_names);
    return r;
  }
  if (!o.lambda1.empty()) {
    const Vector l2 = o.lambda2.empty() ? Vector::Zero(in.cs.count()) : parse_list(o.lambda2, "--lambda2");
    r["fit"] = to_json(fit_penalized(in.data, in.cs, parse_list(o.lambda1, "--lambda1"), l2, spec), in.data.column_names);
  } else {
    if (!o.lambda2.empty()) throw usage("--lambda2 needs --lambda1");
    r["fit"] = to_json(fit_constrained(in.data, in.cs, spec), in.data.column_names);
  }
  return r;
}

TuningCurve run_tuning(const Options& o, const Inputs& in, const FitSpec& spec, std::optional<LsaSurrogate>& sur) {
  const Criterion crit = parse_criterion(o.criterion);
  if (o.grid < 2) throw usage("--grid must be >= 2");
  if (family_of(o.c) == Family::Logistic) {
    if (crit == Criterion::CV) throw usage("logistic tuning uses the surrogate; pass --criterion gcv or bic");
    LsaOptions lo;
    lo.intercept = spec.intercept;
    sur = fit_unpenalized(Family::Logistic, in.data, lo);
    return tune_lsa(*sur, in.cs, spec, o.grid, crit);
  }
  TuneOptions t;
  t.grid_count = o.grid;
  t.folds = o.folds;
  t.criterion = crit;
  if (crit == Criterion::CV && folds_for(o, in.data) < in.data.n()) t.seed = require_seed(o.c, "k-fold cross-validation");
  return tune(in.data, in.cs, spec, t);
}

json cmd_tune(const Options& o) {
  const Inputs in = load(o.c);
  FitSpec spec = make_spec(o, in.cs);
  std::optional<LsaSurrogate> sur;
  const TuningCurve curve = run_tuning(o, in, spec, sur);
  spec.s = curve.selected_s;
  json r = {{"command", "tune"}, {"config", config("tune", o)}, {"provenance", provenance(o, in)}, {"tuning", to_json(curve)}};
  if (sur) {
    r["surrogate"] = to_json(*sur);
    r["fit"] = to_json(fit_lsa_constrained(*sur, in.cs, spec), in.data.column_names);
  } else {
    r["fit"] = to_json(fit_constrained(in.data, in.cs, spec), in.data.column_names);
  }
  if (!o.curve_csv.empty()) write_text_file(o.curve_csv, curve_csv(curve));
  return r;
}

json cmd_bootstrap(const Options& o) {
  const Inputs in = load(o.c);
  const FitSpec spec = make_spec(o, in.cs);
  BootstrapOptions bo;
  bo.B = o.B;
  bo.mode = parse_bootstrap_mode(o.mode);
  bo.seed = require_seed(o.c, "bootstrap");
  bo.tuning.grid_count = o.grid;
  bo.tuning.folds = o.folds;
  bo.tuning.criterion = parse_criterion(o.criterion);
  bo.tuning.seed = bo.seed;
  BootstrapReport rep;
  if (family_of(o.c) == Family::Logistic) {
    if (bo.mode == BootstrapMode::ReTuned && bo.tuning.criterion == Criterion::CV)
      throw usage("logistic tuning uses the surrogate; pass --criterion gcv or bic");
    const ConstraintSet& cs = in.cs;
    const int grid = o.grid;
    const Criterion crit = bo.tuning.criterion;
    const BootstrapMode mode = bo.mode;
    rep = bootstrap_with(in.data, in.data.p(), bo, [&cs, spec, grid, crit, mode](const Dataset& boot, int) {
      LsaOptions lo;
      lo.intercept = spec.intercept;
      const LsaSurrogate s = fit_unpenalized(Family::Logistic, boot, lo);
      FitSpec local = spec;
      if (mode == BootstrapMode::ReTuned) local.s = tune_lsa(s, cs, spec, grid, crit).selected_s;
      return std::make_pair(fit_lsa_constrained(s, cs, local).beta, local.s);
    });
  } else {
    rep = bootstrap_se(in.data, in.cs, spec, bo);
  }
  return {{"command", "bootstrap"},
          {"config", config("bootstrap", o)},
          {"provenance", provenance(o, in)},
          {"bootstrap", to_json(rep, in.data.column_names)}};
}

json cmd_lsa_fit(const Options& o, bool family_given) {
  Inputs in;
  std::string sur_text;
  LsaSurrogate sur;
  FitSpec spec;
  if (!o.surrogate.empty()) {
    if (family_given) throw usage("pass either --family or --surrogate, not both");
    sur_text = read_text_file(o.surrogate);
    sur = parse_surrogate_json(sur_text);
    const int p = static_cast<int>(sur.beta_tilde.size() - (sur.has_intercept ? 1 : 0));
    if (!o.c.constraints.empty()) {
      in.constraints_text = read_text_file(o.c.constraints);
      in.cs = parse_constraints(in.constraints_text, infer_constraint_dimension(in.constraints_text, p));
    } else {
      in.cs = ConstraintSet(p);
    }
    spec = make_spec(o, in.cs);
  } else {
    in = load(o.c);
    spec = make_spec(o, in.cs);
    LsaOptions lo;
    lo.intercept = spec.intercept;
    sur = fit_unpenalized(family_of(o.c), in.data, lo);
  }
  json r = {{"command", "lsa-fit"}, {"config", config("lsa-fit", o)}, {"provenance", provenance(o, in, sur_text)}};
  r["surrogate"] = to_json(sur);
  if (o.criterion != "cv") {
    const TuningCurve curve = tune_lsa(sur, in.cs, spec, o.grid, parse_criterion(o.criterion));
    spec.s = curve.selected_s;
    r["tuning"] = to_json(curve);
  }
  std::vector<std::string> names = in.data.column_names;
  if (names.empty()) {
    const Eigen::Index p = sur.beta_tilde.size() - (sur.has_intercept ? 1 : 0);
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  }
  r["fit"] = to_json(fit_lsa_constrained(sur, in.cs, spec), names);
  return r;
}

json cmd_simulate(const Options& o) {
  const std::uint64_t seed = require_seed(o.c, "simulate");
  if (o.c.out.empty()) throw usage("simulate needs --out DIR");
  const Scenario sc = simulate(o.scenario, seed, o.n);
  write_scenario(sc, seed, o.c.out);
  return {{"command", "simulate"},
          {"scenario", sc.name},
          {"seed", seed},
          {"n", sc.data.n()},
          {"family", sc.family},
          {"response", sc.response},
          {"files", {o.c.out + "/data.csv", o.c.out + "/constraints.txt", o.c.out + "/truth.json"}}};
}

void add_common(CLI::App* app, Common& c, bool data_flags = true) {
  if (data_flags) {
    app->add_option("--data", c.data, "CSV file with a header row");
    app->add_option("--response", c.response, "response column name")->capture_default_str();
    app->add_option("--constraints", c.constraints, "constraint file");
    app->add_option("--tol", c.tol, "sparsity tolerance")->capture_default_str();
    app->add_option("--mc-init", c.mc_init, "Monte Carlo start: draws,seed");
    app->add_flag("--no-intercept", c.no_intercept, "fit without an intercept");
    app->add_flag("--no-standardize", c.no_standardize, "solve on the raw column scale");
    app->add_flag("--timing", c.timing, "add wall-clock seconds to the provenance block");
  }
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output file (directory for simulate)");
}

void emit(const json& report, const Common& c, std::ostream& out) {
  const std::string text = dump_json(report);
  if (c.out.empty()) out << text;
  else write_text_file(c.out, text);
}

void error_line(std::ostream& err, ErrorKind kind, const std::string& msg) {
  err << dump_json_line({{"error", {{"kind", to_string(kind)}, {"message", msg}, {"exit_code", exit_code(kind)}}}}) << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained lasso with prior constraint information"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PCLASSO_VERSION);
  Options o;

  auto* fit = app.add_subcommand("fit", "fit at a fixed L1 budget (or in penalized form)");
  add_common(fit, o.c);
  fit->add_option("--s", o.s, "L1 budget (inf for none)")->capture_default_str();
  fit->add_option("--weights", o.weights, "per-coefficient weights w1,...,wp");
  fit->add_option("--lambda1", o.lambda1, "penalized form: L1 multiplier (scalar or list)");
  fit->add_option("--lambda2", o.lambda2, "penalized form: constraint multipliers");
  fit->add_option("--family", o.c.family, "gaussian or logistic")->capture_default_str();

  auto* tune = app.add_subcommand("tune", "choose s by cv, gcv or bic and fit at it");
  add_common(tune, o.c);
  tune->add_option("--grid", o.grid, "grid size")->capture_default_str();
  tune->add_option("--folds", o.folds, "CV folds (default n: leave-one-out)");
  tune->add_option("--criterion", o.criterion, "cv, gcv or bic")->capture_default_str();
  tune->add_option("--curve-csv", o.curve_csv, "also write the tuning curve as CSV");
  tune->add_option("--weights", o.weights, "per-coefficient weights w1,...,wp");
  tune->add_option("--family", o.c.family, "gaussian or logistic")->capture_default_str();

  auto* boot = app.add_subcommand("bootstrap", "case-resampling standard errors");
  add_common(boot, o.c);
  boot->add_option("--B", o.B, "replicates")->capture_default_str();
  boot->add_option("--mode", o.mode, "fixed or retune")->capture_default_str();
  boot->add_option("--s", o.s, "L1 budget for fixed mode")->capture_default_str();
  boot->add_option("--grid", o.grid, "grid size (retune)")->capture_default_str();
  boot->add_option("--folds", o.folds, "CV folds (retune)");
  boot->add_option("--criterion", o.criterion, "cv, gcv or bic (retune)")->capture_default_str();
  boot->add_option("--weights", o.weights, "per-coefficient weights w1,...,wp");
  boot->add_option("--family", o.c.family, "gaussian or logistic")->capture_default_str();

  auto* lsa = app.add_subcommand("lsa-fit", "least-squares approximation fit for GLMs");
  add_common(lsa, o.c);
  auto* fam = lsa->add_option("--family", o.c.family, "gaussian or logistic")->capture_default_str();
  lsa->add_option("--surrogate", o.surrogate, "JSON surrogate {beta_tilde, precision, n}");
  lsa->add_option("--s", o.s, "L1 budget")->capture_default_str();
  lsa->add_option("--criterion", o.criterion, "gcv or bic to tune s on the surrogate");
  lsa->add_option("--grid", o.grid, "grid size when tuning")->capture_default_str();
  lsa->add_option("--weights", o.weights, "per-coefficient weights w1,...,wp");

  auto* sim = app.add_subcommand("simulate", "write a synthetic scenario");
  add_common(sim, o.c, false);
  sim->add_option("--scenario", o.scenario, "demand, concavity, synergy or theorem2")->required();
  sim->add_option("--n", o.n, "sample size override");

  auto* orc = app.add_subcommand("oracle", "");
  orc->group("");  // undocumented: regenerates test fixtures
  add_common(orc, o.c, false);
  orc->add_option("--kind", o.kind, "bruteforce or logistic")->required();
  orc->add_option("--count", o.count, "records")->capture_default_str();

  const auto start = std::chrono::steady_clock::now();
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      error_line(err, ErrorKind::Usage, e.what());
      return exit_code(ErrorKind::Usage);
    }
    json report;
    if (*fit) report = cmd_fit(o);
    else if (*tune) report = cmd_tune(o);
    else if (*boot) report = cmd_bootstrap(o);
    else if (*lsa) report = cmd_lsa_fit(o, fam->count() > 0);
    else if (*sim) {
      out << dump_json(cmd_simulate(o));
      return 0;
    } else if (*orc) {
      const std::string text = oracle::generate_fixtures(o.kind, o.count, o.c.seed.value_or(0));
      if (o.c.out.empty()) out << text;
      else write_text_file(o.c.out, text);
      return 0;
    }
    if (o.c.timing) {
      report["provenance"]["wall_clock_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    emit(report, o.c, out);
    return 0;
  } catch (const Error& e) {
    error_line(err, e.kind(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    error_line(err, ErrorKind::SolverFailure, e.what());
    return exit_code(ErrorKind::SolverFailure);
  }
}

}  // namespace pclasso::cli
