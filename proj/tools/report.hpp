#pragma once

#include <string>

#include "json.hpp"
#include "pclasso/estimator.hpp"
#include "pclasso/inference.hpp"
#include "pclasso/lsa_glm.hpp"
#include "pclasso/tuning.hpp"

namespace pclasso::cli {

using json = nlohmann::json;

/// Key-sorted JSON with every floating value printed as %.17g; non-finite values become null.
std::string dump_json(const json& j);

/// Single-line variant for error messages.
std::string dump_json_line(const json& j);

json to_json(const Vector& v);
json to_json(const FitResult& fit, const std::vector<std::string>& names);
json to_json(const TuningCurve& curve);
json to_json(const BootstrapReport& report, const std::vector<std::string>& names);
json to_json(const LsaSurrogate& s);

/// "s,value,valid" rows for external plotting.
std::string curve_csv(const TuningCurve& curve);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace pclasso::cli
