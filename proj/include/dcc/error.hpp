#pragma once

#include <stdexcept>
#include <string>

namespace dcc {

enum class ErrorCode {
  ZeroRow,
  DimMismatch,
  NonFinite,
  EmptyClass,
  LabelOutOfRange,
  NonPositiveTau,
  ClassAbsent,
  AllOutliers,
  SpecInvalid,
  ParseError,
  TooFewIds,
  VersionMismatch,
  StaleCache,
  ClusterCollapse,
  NoRelevant,
  EmptySplit,
  ConfigError,
  IoError,
  InvalidArgument,
  InternalError,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::NonPositiveTau: return "NonPositiveTau";
    case ErrorCode::ClassAbsent: return "ClassAbsent";
    case ErrorCode::AllOutliers: return "AllOutliers";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::TooFewIds: return "TooFewIds";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::ClusterCollapse: return "ClusterCollapse";
    case ErrorCode::NoRelevant: return "NoRelevant";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InternalError: return "InternalError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void check(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) raise(code, message);
}

}  // namespace dcc
