#pragma once

#include <ostream>

namespace pclasso::cli {

/// Runs the command line; returns the process exit code. Reports go to `out` (or --out),
/// errors to `err` as one JSON line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pclasso::cli
