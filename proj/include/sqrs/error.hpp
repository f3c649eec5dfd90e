#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqrs {

enum class ErrorCode {
  InvalidArgument,
  InvalidProbabilities,
  InsufficientData,
  InsufficientStatistics,
  DegenerateRow,
  UndefinedRatio,
  Singularity,
  InvalidTriplet,
  NoInformation,
  UnknownFigure,
  Io,
  Config,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidProbabilities: return "invalid_probabilities";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::InsufficientStatistics: return "insufficient_statistics";
    case ErrorCode::DegenerateRow: return "degenerate_row";
    case ErrorCode::UndefinedRatio: return "undefined_ratio";
    case ErrorCode::Singularity: return "singularity";
    case ErrorCode::InvalidTriplet: return "invalid_triplet";
    case ErrorCode::NoInformation: return "no_information";
    case ErrorCode::UnknownFigure: return "unknown_figure";
    case ErrorCode::Io: return "io";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

/// Exception carrying a stable, machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sqrs
