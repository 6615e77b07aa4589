#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace igss {

enum class ErrorCode {
  InvalidArgument,
  InvalidTransform,
  NoPath,
  CycleDetected,
  TooFewPoints,
  DegenerateGeometry,
  LabelMismatch,
  TooFewPoses,
  InsufficientRotation,
  CoplanarPoints,
  PointAtInfinity,
  PatternAmbiguous,
  TooFewBlobs,
  ParallelRays,
  TooFewCommonLabels,
  Unreachable,
  LimitViolation,
  NoSafePath,
  NegativeBreach,
  LevelMismatch,
  DuplicateName,
  UnknownModule,
  LayerViolation,
  IllegalTransition,
  GuardFailed,
  IOFailure,
  ParseError,
  SchemaVersionMismatch,
  DegenerateSpec,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the toolkit; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace igss
