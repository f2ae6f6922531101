#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pclasso/qp_solver.hpp"

namespace pclasso {

/// Response vector and design matrix with column metadata.
struct Dataset {
  Vector y;
  Matrix X;
  std::vector<std::string> column_names;
  bool has_intercept_column = false;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  // Throws Error(Data) on non-finite entries, n < 1, mismatched shapes or duplicate names.
  void validate() const;

  // Rows selected by index, in the given order (duplicates allowed).
  Dataset rows(const std::vector<int>& idx) const;
};

/// Builds and validates a dataset; column names default to x1..xp.
Dataset make_dataset(Matrix X, Vector y, std::vector<std::string> names = {});

Dataset parse_csv(std::string_view text, const std::string& response_column);
Dataset read_csv(const std::string& path, const std::string& response_column);

/// Writes `response` followed by the design columns, 17 significant digits.
std::string to_csv(const Dataset& data, const std::string& response_column);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace pclasso
