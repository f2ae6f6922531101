#pragma once

#include <stdexcept>
#include <string>

namespace pclasso {

enum class ErrorKind {
  Usage,
  Data,
  DimensionMismatch,
  Parse,
  InfeasibleConstraints,
  LinearizationStalled,
  SolverFailure,
  TuningFailed,
  SeparationDetected,
  NonConvergence,
  NoFeasiblePoint,
  GridTooLarge,
};

const char* to_string(ErrorKind kind);

// Process exit code for a given error kind (0 ok, 2 usage, 3 data, 4 infeasible, 5 solver).
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pclasso
