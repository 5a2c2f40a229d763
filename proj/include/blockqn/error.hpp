#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blockqn {

enum class ErrorKind {
  DimensionMismatch,
  NotPositiveDefinite,
  SingularBlock,
  MissingResidualDiag,
  EstimatorBreakdown,
  NonFinite,
  NonConvergence,
  Diverged,
  InsufficientData,
  ParseError,
  EmptyDataset,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::MissingResidualDiag: return "MissingResidualDiag";
    case ErrorKind::EstimatorBreakdown: return "EstimatorBreakdown";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace blockqn
