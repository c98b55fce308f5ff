#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace survrnc {

enum class ErrorCode {
  NonFiniteFeature,
  NegativeTime,
  BadEventFlag,
  RaggedFeatures,
  DuplicateId,
  AllCensored,
  DegenerateTimes,
  LengthMismatch,
  ShapeMismatch,
  TapeMismatch,
  BinWidthMismatch,
  NoComparablePairs,
  UndefinedAtHorizon,
  TooFewUncensored,
  CalibrationFailed,
  ParseError,
  InvalidArgument,
  NonFiniteLoss,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::BadEventFlag: return "BadEventFlag";
    case ErrorCode::RaggedFeatures: return "RaggedFeatures";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::AllCensored: return "AllCensored";
    case ErrorCode::DegenerateTimes: return "DegenerateTimes";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TapeMismatch: return "TapeMismatch";
    case ErrorCode::BinWidthMismatch: return "BinWidthMismatch";
    case ErrorCode::NoComparablePairs: return "NoComparablePairs";
    case ErrorCode::UndefinedAtHorizon: return "UndefinedAtHorizon";
    case ErrorCode::TooFewUncensored: return "TooFewUncensored";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace survrnc
