#include "pclasso/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pclasso/error.hpp"

namespace pclasso {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void Dataset::validate() const {
  if (y.size() < 1) throw Error(ErrorKind::Data, "dataset has no rows");
  if (X.rows() != y.size()) throw Error(ErrorKind::Data, "design and response row counts differ");
  if (!y.allFinite() || !X.allFinite()) throw Error(ErrorKind::Data, "dataset contains non-finite values");
  if (static_cast<Eigen::Index>(column_names.size()) != X.cols())
    throw Error(ErrorKind::Data, "column name count does not match design width");
  std::set<std::string> seen;
  for (const auto& name : column_names) {
    if (!seen.insert(name).second) throw Error(ErrorKind::Data, "duplicate column name '" + name + "'");
  }
}

Dataset Dataset::rows(const std::vector<int>& idx) const {
  Dataset out;
  out.column_names = column_names;
  out.has_intercept_column = has_intercept_column;
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.y.resize(n);
  out.X.resize(n, X.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const int i = idx[static_cast<size_t>(r)];
    if (i < 0 || i >= y.size()) throw Error(ErrorKind::Data, "row index " + std::to_string(i) + " out of range");
    out.y[r] = y[idx[static_cast<size_t>(r)]];
    out.X.row(r) = X.row(idx[static_cast<size_t>(r)]);
  }
  return out;
}

Dataset make_dataset(Matrix X, Vector y, std::vector<std::string> names) {
  Dataset d;
  if (names.empty()) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  }
  d.X = std::move(X);
  d.y = std::move(y);
  d.column_names = std::move(names);
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
    if (d.X.rows() > 0 && (d.X.col(j).array() == 1.0).all()) d.has_intercept_column = true;
  }
  d.validate();
  return d;
}

Dataset parse_csv(std::string_view text, const std::string& response_column) {
  std::vector<std::string_view> lines;
  {
    size_t pos = 0;
    while (pos < text.size()) {
      size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      pos = end + 1;
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorKind::Data, "empty CSV input");
  if (!lines.empty() && lines.front().starts_with("\xEF\xBB\xBF")) lines.front().remove_prefix(3);

  const auto header = split_commas(lines.front());
  auto resp_it = std::find(header.begin(), header.end(), response_column);
  if (resp_it == header.end()) throw Error(ErrorKind::Data, "response column '" + response_column + "' not found");
  const auto resp = static_cast<size_t>(resp_it - header.begin());

  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  if (n < 1) throw Error(ErrorKind::Data, "CSV has a header but no data rows");
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  Matrix X(n, p);
  Vector y(n);
  std::vector<std::string> names;
  for (size_t c = 0; c < header.size(); ++c) {
    if (c != resp) names.emplace_back(header[c]);
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto cells = split_commas(lines[static_cast<size_t>(r) + 1]);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::Data, "row " + std::to_string(r + 2) + ": expected " + std::to_string(header.size()) +
                                       " cells, found " + std::to_string(cells.size()));
    }
    Eigen::Index col = 0;
    for (size_t c = 0; c < cells.size(); ++c) {
      std::string_view cell = cells[c];
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::Data, "row " + std::to_string(r + 2) + ", column '" + std::string(header[c]) +
                                         "': non-numeric cell '" + std::string(cells[c]) + "'");
      }
      if (c == resp) y[r] = v;
      else X(r, col++) = v;
    }
  }
  return make_dataset(std::move(X), std::move(y), std::move(names));
}

Dataset read_csv(const std::string& path, const std::string& response_column) {
  return parse_csv(read_text_file(path), response_column);
}

std::string to_csv(const Dataset& data, const std::string& response_column) {
  std::ostringstream os;
  os << response_column;
  for (const auto& name : data.column_names) os << ',' << name;
  os << '\n';
  for (Eigen::Index r = 0; r < data.n(); ++r) {
    os << fmt17(data.y[r]);
    for (Eigen::Index c = 0; c < data.p(); ++c) os << ',' << fmt17(data.X(r, c));
    os << '\n';
  }
  return os.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Data, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Data, "cannot write '" + path + "'");
  out << contents;
}

}  // namespace pclasso
