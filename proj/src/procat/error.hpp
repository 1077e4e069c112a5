#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace procat {

enum class Errc {
  MalformedRow,
  BadTimestamp,
  EmptyLog,
  ShiftCollision,
  Deadlock,
  UnknownLabel,
  LabelCollision,
  PlanLogMismatch,
  NotEnabled,
  UnknownLabelPolicyViolation,
  Disconnected,
  ZeroDuration,
  MissingAux,
  DegenerateLabels,
  TooFewPairs,
  DimensionMismatch,
  NonFiniteLoss,
  SearchBudgetExceeded,
  BudgetExceeded,
  InvalidArgument,
  Io,
};

const char* errc_name(Errc code);

// Coarse grouping used by the C API and the CLI exit codes.
enum class ErrorKind { Validation, Budget, Io };

ErrorKind kind_of(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> row = std::nullopt);

  Errc code() const noexcept { return code_; }
  // 1-based source row (header = row 1) for ingestion errors.
  std::optional<std::size_t> row() const noexcept { return row_; }
  // Epoch index for training failures, trace index for replay failures.
  std::optional<std::size_t> index() const noexcept { return row_; }

 private:
  Errc code_;
  std::optional<std::size_t> row_;
};

}  // namespace procat
