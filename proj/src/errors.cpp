#include "cqgrav/errors.hpp"

namespace cqgrav {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotCompletelyPositive: return "NotCompletelyPositive";
    case ErrorCode::NotTracePreserving: return "NotTracePreserving";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::UnsupportedFamily: return "UnsupportedFamily";
    case ErrorCode::DivergentIntegral: return "DivergentIntegral";
    case ErrorCode::MissingDecoherenceRate: return "MissingDecoherenceRate";
    case ErrorCode::InvalidCoupling: return "InvalidCoupling";
    case ErrorCode::InvalidPair: return "InvalidPair";
    case ErrorCode::OverflowGuard: return "OverflowGuard";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Error";
}

}  // namespace cqgrav
