#include "placer/common.hpp"

namespace placer {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::CycleError: return "CycleError";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InfeasibleInstance: return "InfeasibleInstance";
    case ErrorCode::StateError: return "StateError";
    case ErrorCode::IncompletePlacement: return "IncompletePlacement";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::DeadEnd: return "DeadEnd";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NoFeasibleSample: return "NoFeasibleSample";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace placer
