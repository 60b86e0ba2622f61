#pragma once

#include <stdexcept>
#include <string>

namespace surgnav {

enum class ErrorCode {
  NonFiniteInput,
  NonPositiveDepth,
  EmptyMesh,
  EmptyMask,
  DegenerateMask,
  DimensionMismatch,
  InsufficientAnchor,
  EmptyCloud,
  DegenerateCloud,
  TooFewPoints,
  DegenerateConfiguration,
  NoCheiralSolution,
  DegenerateYaw,
  ZeroPrevLength,
  SelectionAlreadyPending,
  PropagatorFailure,
  LengthMismatch,
  IoError,
  ParseError,
  ConfigError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::DegenerateMask: return "DegenerateMask";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientAnchor: return "InsufficientAnchor";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NoCheiralSolution: return "NoCheiralSolution";
    case ErrorCode::DegenerateYaw: return "DegenerateYaw";
    case ErrorCode::ZeroPrevLength: return "ZeroPrevLength";
    case ErrorCode::SelectionAlreadyPending: return "SelectionAlreadyPending";
    case ErrorCode::PropagatorFailure: return "PropagatorFailure";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace surgnav
