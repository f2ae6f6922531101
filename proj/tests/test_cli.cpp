#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "pclasso/dataset.hpp"
#include "pclasso/estimator.hpp"

using namespace pclasso;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pclasso");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Rebuilds the command line from a report's config echo.
std::vector<std::string> replay_args(const json& report) {
  std::vector<std::string> args{report.at("command").get<std::string>()};
  for (const auto& [key, value] : report.at("config").items()) {
    if (key == "intercept" || key == "standardize") {
      if (!value.get<bool>()) args.push_back("--no-" + key);
      continue;
    }
    std::string text;
    if (value.is_string()) text = value.get<std::string>();
    else text = value.dump();
    if (text.empty()) continue;
    std::string flag = "--" + key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    args.push_back(flag);
    args.push_back(text);
  }
  return args;
}

std::string scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "pclasso_cli_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("simulate writes the concavity constraint") {
  const std::string dir = scratch("concavity");
  auto r = run({"simulate", "--scenario", "concavity", "--seed", "7", "--out", dir});
  REQUIRE(r.code == 0);
  CHECK(read_text_file(dir + "/constraints.txt").find("nl: negdet 4 5 6") != std::string::npos);
  CHECK(std::filesystem::exists(dir + "/data.csv"));
  CHECK(std::filesystem::exists(dir + "/truth.json"));
}

TEST_CASE("huge budget reproduces least squares") {
  const std::string dir = scratch("ols");
  REQUIRE(run({"simulate", "--scenario", "theorem2", "--seed", "3", "--out", dir}).code == 0);
  auto r = run({"fit", "--data", dir + "/data.csv", "--s", "1e9"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  const auto beta = j.at("fit").at("beta").get<std::vector<double>>();
  const auto [b0, ols_beta] = ols(read_csv(dir + "/data.csv", "y"), true);
  REQUIRE(beta.size() == 6);
  for (size_t k = 0; k < beta.size(); ++k) CHECK(beta[k] == doctest::Approx(ols_beta[static_cast<Eigen::Index>(k)]).epsilon(1e-8));
  CHECK(j.at("fit").at("intercept").get<double>() == doctest::Approx(b0).epsilon(1e-8));
  CHECK_FALSE(j.at("provenance").contains("wall_clock_seconds"));
  CHECK(j.at("provenance").at("data_sha256").get<std::string>().size() == 64);
}

TEST_CASE("tune then fit at the selected budget") {
  const std::string dir = scratch("tune");
  REQUIRE(run({"simulate", "--scenario", "theorem2", "--seed", "4", "--out", dir}).code == 0);
  const std::string cons = dir + "/constraints.txt";
  auto t = run({"tune", "--data", dir + "/data.csv", "--constraints", cons, "--grid", "10", "--criterion", "cv",
                "--curve-csv", dir + "/curve.csv"});
  REQUIRE(t.code == 0);
  const json tj = json::parse(t.out);
  char s[64];
  std::snprintf(s, sizeof(s), "%.17g", tj.at("tuning").at("selected_s").get<double>());
  auto f = run({"fit", "--data", dir + "/data.csv", "--constraints", cons, "--s", s});
  REQUIRE(f.code == 0);
  CHECK(json::parse(f.out).at("fit") == tj.at("fit"));
  CHECK(read_text_file(dir + "/curve.csv").rfind("s,", 0) == 0);
  // same command, same bytes
  CHECK(run({"tune", "--data", dir + "/data.csv", "--constraints", cons, "--grid", "10", "--criterion", "cv"}).out ==
        t.out);
}

TEST_CASE("exit codes") {
  const std::string dir = scratch("errors");
  REQUIRE(run({"simulate", "--scenario", "theorem2", "--seed", "5", "--out", dir}).code == 0);
  const std::string data = dir + "/data.csv";

  auto usage = run({"fit", "--data", data, "--s", "-1"});
  CHECK(usage.code == 2);
  CHECK(json::parse(usage.err).at("error").at("kind") == "Usage");
  CHECK(run({"fit", "--data", data, "--bogus"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"bootstrap", "--data", data}).code == 2);
  CHECK(run({"tune", "--data", data, "--folds", "5"}).code == 2);

  CHECK(run({"fit", "--data", dir + "/missing.csv"}).code == 3);
  CHECK(run({"fit", "--data", data, "--response", "nope"}).code == 3);

  write_text_file(dir + "/bad.txt", "lin: 1 0 0 0 0 0 >= 1\nlin: 1 0 0 0 0 0 <= 0\n");
  auto inf = run({"fit", "--data", data, "--constraints", dir + "/bad.txt"});
  CHECK(inf.code == 4);
  CHECK(inf.out.empty());

  write_text_file(dir + "/nl.txt", "nl: negdet 1 2 3\n");
  CHECK(run({"fit", "--data", data, "--constraints", dir + "/nl.txt"}).code == 2);
  CHECK(run({"fit", "--data", data, "--constraints", dir + "/nl.txt", "--mc-init", "500,1"}).code == 0);
}

TEST_CASE("logistic pipeline goes through the surrogate") {
  const std::string dir = scratch("synergy");
  REQUIRE(run({"simulate", "--scenario", "synergy", "--seed", "2", "--out", dir}).code == 0);
  const std::vector<std::string> base = {"--data", dir + "/data.csv", "--constraints", dir + "/constraints.txt",
                                         "--family", "logistic"};
  auto args = base;
  args.insert(args.begin(), "tune");
  CHECK(run(args).code == 2);  // cv has no per-row loss here
  args.insert(args.end(), {"--criterion", "bic", "--grid", "8"});
  auto t = run(args);
  REQUIRE(t.code == 0);
  const json j = json::parse(t.out);
  CHECK(j.at("surrogate").at("family") == "logistic");
  for (double b : j.at("fit").at("beta").get<std::vector<double>>()) CHECK(std::isfinite(b));

  auto lsa = run({"lsa-fit", "--data", dir + "/data.csv", "--family", "logistic", "--s", "2"});
  REQUIRE(lsa.code == 0);
  const json lj = json::parse(lsa.out);
  CHECK(lj.at("fit").at("l1_norm").get<double>() <= 2.0 + 1e-9);

  // the surrogate printed by lsa-fit can be fed back in
  write_text_file(dir + "/sur.json", lj.at("surrogate").dump());
  auto back = run({"lsa-fit", "--surrogate", dir + "/sur.json", "--s", "2"});
  REQUIRE(back.code == 0);
  const auto b1 = json::parse(back.out).at("fit").at("beta").get<std::vector<double>>();
  const auto b2 = lj.at("fit").at("beta").get<std::vector<double>>();
  REQUIRE(b1.size() == b2.size());
  for (size_t k = 0; k < b1.size(); ++k) CHECK(b1[k] == doctest::Approx(b2[k]).epsilon(1e-8));
}

TEST_CASE("echoed configuration replays to the same report") {
  const std::string dir = scratch("replay");
  REQUIRE(run({"simulate", "--scenario", "demand", "--seed", "9", "--out", dir}).code == 0);
  const std::string data = dir + "/data.csv";
  const std::string cons = dir + "/constraints.txt";
  const std::vector<std::vector<std::string>> commands = {
      {"fit", "--data", data, "--response", "log_q", "--constraints", cons, "--s", "1.5", "--no-standardize"},
      {"tune", "--data", data, "--response", "log_q", "--constraints", cons, "--grid", "6", "--folds", "4", "--seed", "2"},
      {"bootstrap", "--data", data, "--response", "log_q", "--B", "20", "--s", "1", "--seed", "4", "--no-intercept"},
  };
  for (const auto& cmd : commands) {
    auto first = run(cmd);
    REQUIRE(first.code == 0);
    auto again = run(replay_args(json::parse(first.out)));
    CHECK(again.code == 0);
    CHECK(again.out == first.out);
  }
}
