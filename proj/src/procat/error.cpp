#include "procat/error.hpp"

namespace procat {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::BadTimestamp: return "BadTimestamp";
    case Errc::EmptyLog: return "EmptyLog";
    case Errc::ShiftCollision: return "ShiftCollision";
    case Errc::Deadlock: return "Deadlock";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::LabelCollision: return "LabelCollision";
    case Errc::PlanLogMismatch: return "PlanLogMismatch";
    case Errc::NotEnabled: return "NotEnabled";
    case Errc::UnknownLabelPolicyViolation: return "UnknownLabelPolicyViolation";
    case Errc::Disconnected: return "Disconnected";
    case Errc::ZeroDuration: return "ZeroDuration";
    case Errc::MissingAux: return "MissingAux";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::TooFewPairs: return "TooFewPairs";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::SearchBudgetExceeded: return "SearchBudgetExceeded";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

ErrorKind kind_of(Errc code) {
  switch (code) {
    case Errc::SearchBudgetExceeded:
    case Errc::BudgetExceeded:
      return ErrorKind::Budget;
    case Errc::Io:
      return ErrorKind::Io;
    default:
      return ErrorKind::Validation;
  }
}

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> row)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), row_(row) {}

}  // namespace procat
