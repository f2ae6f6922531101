#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pclasso/oracle.hpp"

namespace pclasso::oracle {

// Records are stored as {input, oracle_output, resolution, seed}.

struct BruteForceCase {
  std::uint64_t seed = 0;
  Dataset data;
  std::string constraints_text;
  double s = 0.0;
  bool intercept = false;
  double resolution = 1e-3;
  OracleFit grid_fit;
  OracleFit polished;
};

struct LogisticCase {
  std::uint64_t seed = 0;
  Dataset data;
  bool intercept = true;
  Vector beta_tilde;
};

/// Random instance with p <= 3 and linear constraints, solved by the grid oracle.
BruteForceCase make_bruteforce_case(std::uint64_t seed);

/// seed 0 is a hand-written n = 8 dataset; other seeds draw a random design.
LogisticCase make_logistic_case(std::uint64_t seed);

/// JSON array of `count` records of the given kind ("bruteforce" or "logistic") with
/// seeds first_seed, first_seed + 1, ...
std::string generate_fixtures(const std::string& kind, int count, std::uint64_t first_seed);

std::vector<BruteForceCase> load_bruteforce_fixtures(const std::string& path);
std::vector<LogisticCase> load_logistic_fixtures(const std::string& path);

}  // namespace pclasso::oracle
