#include "ldsc/error.hpp"

namespace ldsc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyStructure: return "empty structure";
    case ErrorCode::SizeOverflow: return "size overflow";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::StructureMismatch: return "structure mismatch";
    case ErrorCode::LengthMismatch: return "length mismatch";
    case ErrorCode::NotPositiveDefinite: return "not positive definite";
    case ErrorCode::DegeneratePanel: return "degenerate panel";
    case ErrorCode::DegenerateDesign: return "degenerate design";
    case ErrorCode::ZeroScores: return "zero scores";
    case ErrorCode::TooFewGroups: return "too few groups";
    case ErrorCode::NonpositiveHeritability: return "nonpositive heritability";
    case ErrorCode::ZeroEffectNonzeroH2: return "zero effect with nonzero h2";
    case ErrorCode::EmptySupport: return "empty support";
    case ErrorCode::InfeasibleSupport: return "infeasible support";
    case ErrorCode::UnreachableRg: return "unreachable genetic correlation";
    case ErrorCode::ConstantSample: return "constant sample";
    case ErrorCode::BadRange: return "bad range";
    case ErrorCode::MissingMaf: return "missing maf";
    case ErrorCode::InsufficientSamples: return "insufficient samples";
    case ErrorCode::ParseError: return "parse error";
    case ErrorCode::MissingColumn: return "missing column";
    case ErrorCode::IoError: return "io error";
  }
  return "unknown error";
}

ErrorCategory error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::DegeneratePanel:
    case ErrorCode::DegenerateDesign:
    case ErrorCode::ZeroScores:
    case ErrorCode::TooFewGroups:
    case ErrorCode::NonpositiveHeritability:
    case ErrorCode::ZeroEffectNonzeroH2:
    case ErrorCode::EmptySupport:
    case ErrorCode::InfeasibleSupport:
    case ErrorCode::UnreachableRg:
    case ErrorCode::ConstantSample:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_code_name(code)) + (what.empty() ? "" : ": " + what)),
      code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ldsc
