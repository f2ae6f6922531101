#include "pclasso/oracle_fixtures.hpp"

#include <random>

#include "json.hpp"
#include "pclasso/error.hpp"

namespace pclasso::oracle {

namespace {

using json = nlohmann::json;

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
  return rows;
}

Matrix to_mat(const json& j, Eigen::Index cols_if_empty) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = n ? static_cast<Eigen::Index>(rows[0].size()) : cols_if_empty;
  Matrix m(n, p);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < p; ++c) m(r, c) = rows[static_cast<size_t>(r)].at(static_cast<size_t>(c));
  return m;
}

json data_json(const Dataset& d) { return {{"X", mat(d.X)}, {"y", vec(d.y)}}; }

Dataset data_from(const json& j) {
  const Vector y = to_vec(j.at("y"));
  return make_dataset(to_mat(j.at("X"), 0), y);
}

json fit_json(const OracleFit& f) { return {{"beta", vec(f.beta)}, {"objective", f.objective}, {"points", f.points}}; }

OracleFit fit_from(const json& j) {
  OracleFit f;
  f.beta = to_vec(j.at("beta"));
  f.objective = j.at("objective").get<double>();
  f.points = j.at("points").get<long long>();
  return f;
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Matrix normals(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n01;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n01(rng);
  return m;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json load_array(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorKind::Parse, path + ": expected a JSON array");
  return j;
}

}  // namespace

BruteForceCase make_bruteforce_case(std::uint64_t seed) {
  std::mt19937_64 rng(1000 + seed);
  BruteForceCase c;
  c.seed = seed;
  const int p = 1 + static_cast<int>(seed % 3);
  const int n = 20;
  const Matrix X = normals(rng, n, p);
  const Vector beta = normals(rng, p, 1).col(0);
  const Vector y = X * beta + 0.5 * normals(rng, n, 1).col(0);
  c.data = make_dataset(X, y);
  const int m = 1 + static_cast<int>(seed % 2);
  std::string text;
  for (int r = 0; r < m; ++r) {
    const Vector row = normals(rng, p, 1).col(0);
    text += "lin:";
    for (int j = 0; j < p; ++j) text += " " + fmt(row[j]);
    text += " <= " + fmt(uniform(rng, 0.0, 0.3)) + "\n";
  }
  c.constraints_text = text;
  const double hi = p == 1 ? 1.5 : p == 2 ? 1.2 : 0.4;
  const double lo = p == 3 ? 0.2 : 0.3;
  c.s = uniform(rng, lo, hi);
  const ConstraintSet cs = parse_constraints(c.constraints_text, p);
  c.grid_fit = brute_force_fit(c.data, cs, c.s, GridSpec::box(p, c.s, c.resolution));
  c.polished = polish(c.data, cs, c.s, c.grid_fit, c.resolution);
  return c;
}

LogisticCase make_logistic_case(std::uint64_t seed) {
  LogisticCase c;
  c.seed = seed;
  if (seed == 0) {
    Matrix X(8, 2);
    X << -1.0, 0.5, -0.5, -1.0, 0.0, 1.5, 0.5, -0.5, 1.0, 0.2, 1.5, -1.2, -1.5, 0.8, 2.0, 0.1;
    Vector y(8);
    y << 0, 1, 0, 1, 1, 0, 1, 1;
    c.data = make_dataset(X, y);
  } else {
    std::mt19937_64 rng(5000 + seed);
    const int p = 2 + static_cast<int>(seed % 3);
    const int n = 60 + 20 * static_cast<int>(seed % 5);
    const Matrix X = normals(rng, n, p);
    const Vector beta = 0.8 * normals(rng, p, 1).col(0);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      const double pi = 1.0 / (1.0 + std::exp(-(0.3 + X.row(i).dot(beta))));
      y[i] = uniform(rng, 0.0, 1.0) < pi ? 1.0 : 0.0;
    }
    c.data = make_dataset(X, y);
  }
  c.beta_tilde = newton_logistic(c.data.X, c.data.y, c.intercept);
  return c;
}

std::string generate_fixtures(const std::string& kind, int count, std::uint64_t first_seed) {
  if (count < 1) throw Error(ErrorKind::Usage, "fixture count must be >= 1");
  json out = json::array();
  for (int k = 0; k < count; ++k) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(k);
    if (kind == "bruteforce") {
      const auto c = make_bruteforce_case(seed);
      out.push_back({{"seed", c.seed},
                     {"resolution", c.resolution},
                     {"input", {{"data", data_json(c.data)}, {"constraints", c.constraints_text}, {"s", c.s},
                                {"intercept", c.intercept}}},
                     {"oracle_output", {{"grid", fit_json(c.grid_fit)}, {"polished", fit_json(c.polished)}}}});
    } else if (kind == "logistic") {
      const auto c = make_logistic_case(seed);
      out.push_back({{"seed", c.seed},
                     {"resolution", nullptr},
                     {"input", {{"data", data_json(c.data)}, {"intercept", c.intercept}}},
                     {"oracle_output", {{"beta_tilde", vec(c.beta_tilde)}}}});
    } else {
      throw Error(ErrorKind::Usage, "unknown fixture kind '" + kind + "' (expected bruteforce or logistic)");
    }
  }
  return out.dump(1) + "\n";
}

std::vector<BruteForceCase> load_bruteforce_fixtures(const std::string& path) {
  std::vector<BruteForceCase> out;
  for (const auto& r : load_array(path)) {
    BruteForceCase c;
    c.seed = r.at("seed").get<std::uint64_t>();
    c.resolution = r.at("resolution").get<double>();
    const auto& in = r.at("input");
    c.data = data_from(in.at("data"));
    c.constraints_text = in.at("constraints").get<std::string>();
    c.s = in.at("s").get<double>();
    c.intercept = in.at("intercept").get<bool>();
    c.grid_fit = fit_from(r.at("oracle_output").at("grid"));
    c.polished = fit_from(r.at("oracle_output").at("polished"));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<LogisticCase> load_logistic_fixtures(const std::string& path) {
  std::vector<LogisticCase> out;
  for (const auto& r : load_array(path)) {
    LogisticCase c;
    c.seed = r.at("seed").get<std::uint64_t>();
    const auto& in = r.at("input");
    c.data = data_from(in.at("data"));
    c.intercept = in.at("intercept").get<bool>();
    c.beta_tilde = to_vec(r.at("oracle_output").at("beta_tilde"));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace pclasso::oracle
