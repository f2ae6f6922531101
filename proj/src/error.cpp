#include "pclasso/error.hpp"

namespace pclasso {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::Data: return "DataError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::InfeasibleConstraints: return "InfeasibleConstraints";
    case ErrorKind::LinearizationStalled: return "LinearizationStalled";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::TuningFailed: return "TuningFailed";
    case ErrorKind::SeparationDetected: return "SeparationDetected";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NoFeasiblePoint: return "NoFeasiblePoint";
    case ErrorKind::GridTooLarge: return "GridTooLarge";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Data:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::Parse: return 3;
    case ErrorKind::InfeasibleConstraints:
    case ErrorKind::NoFeasiblePoint: return 4;
    default: return 5;
  }
}

}  // namespace pclasso
