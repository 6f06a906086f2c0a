#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace genage {

enum class ErrorKind {
  DimensionMismatch,
  BadGenderLabel,
  RankOutOfRange,
  NonFiniteFeature,
  BadLadder,
  BadHyperParams,
  SingleClassInput,
  InsufficientRanks,
  NonConvergence,
  DegenerateGender,
  RankDeficient,
  BadConfig,
  LengthMismatch,
  Empty,
  ZeroVector,
  InfeasibleFolds,
  Io,
  Parse,
  Usage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BadGenderLabel: return "BadGenderLabel";
    case ErrorKind::RankOutOfRange: return "RankOutOfRange";
    case ErrorKind::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorKind::BadLadder: return "BadLadder";
    case ErrorKind::BadHyperParams: return "BadHyperParams";
    case ErrorKind::SingleClassInput: return "SingleClassInput";
    case ErrorKind::InsufficientRanks: return "InsufficientRanks";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DegenerateGender: return "DegenerateGender";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::InfeasibleFolds: return "InfeasibleFolds";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this type. `index()`
/// carries the offending sample index, line number, or iteration count when
/// the error kind has one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message),
        index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<std::size_t> index_;
};

}  // namespace genage
