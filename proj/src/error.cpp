#include "igss/error.hpp"

namespace igss {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidTransform: return "InvalidTransform";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::TooFewPoses: return "TooFewPoses";
    case ErrorCode::InsufficientRotation: return "InsufficientRotation";
    case ErrorCode::CoplanarPoints: return "CoplanarPoints";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::PatternAmbiguous: return "PatternAmbiguous";
    case ErrorCode::TooFewBlobs: return "TooFewBlobs";
    case ErrorCode::ParallelRays: return "ParallelRays";
    case ErrorCode::TooFewCommonLabels: return "TooFewCommonLabels";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::LimitViolation: return "LimitViolation";
    case ErrorCode::NoSafePath: return "NoSafePath";
    case ErrorCode::NegativeBreach: return "NegativeBreach";
    case ErrorCode::LevelMismatch: return "LevelMismatch";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnknownModule: return "UnknownModule";
    case ErrorCode::LayerViolation: return "LayerViolation";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::GuardFailed: return "GuardFailed";
    case ErrorCode::IOFailure: return "IOFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::DegenerateSpec: return "DegenerateSpec";
  }
  return "Unknown";
}

}  // namespace igss
