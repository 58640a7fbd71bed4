#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldsc {

enum class ErrorCode {
  // structure and shape
  EmptyStructure,
  SizeOverflow,
  InvalidArgument,
  DimensionMismatch,
  StructureMismatch,
  LengthMismatch,
  // numeric
  NotPositiveDefinite,
  DegeneratePanel,
  DegenerateDesign,
  ZeroScores,
  TooFewGroups,
  NonpositiveHeritability,
  ZeroEffectNonzeroH2,
  EmptySupport,
  InfeasibleSupport,
  UnreachableRg,
  ConstantSample,
  // data and io
  BadRange,
  MissingMaf,
  InsufficientSamples,
  ParseError,
  MissingColumn,
  IoError,
};

/// Coarse grouping used by the command-line front-end to pick exit codes.
enum class ErrorCategory { Data, Numeric };

std::string_view error_code_name(ErrorCode code);
ErrorCategory error_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return error_category(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace ldsc
