#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pclasso/dataset.hpp"

namespace pclasso::cli {

struct Scenario {
  std::string name;
  std::string family;  // gaussian or logistic
  std::string response;
  Dataset data;
  std::string constraints;  // constraint file text
  Vector beta;              // true coefficients
  double intercept = 0.0;
  double sigma = 0.0;       // noise sd (Gaussian scenarios)
};

const std::vector<std::string>& scenario_names();

/// n <= 0 keeps the scenario's default size.
Scenario simulate(const std::string& name, std::uint64_t seed, int n = 0);

/// Writes DIR/data.csv, DIR/constraints.txt and DIR/truth.json.
void write_scenario(const Scenario& sc, std::uint64_t seed, const std::string& dir);

}  // namespace pclasso::cli
