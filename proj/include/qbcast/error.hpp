#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qbcast {

enum class ErrorCode {
  CycleDetected,
  UnknownVertex,
  SelfLoop,
  ParallelEdge,
  MissingSinkDim,
  InvalidNetwork,
  DimensionMismatch,
  ZeroVector,
  InvalidSite,
  SameSite,
  ControlInWord,
  ZeroProbabilityBranchRequested,
  LayoutMismatch,
  PhaseMissing,
  BranchExplosion,
  AncillaAlreadyMeasured,
  DimensionTooLarge,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qbcast
