#include "formctl/errors.hpp"

namespace formctl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNullSpaceEmpty: return "NullSpaceEmpty";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kMissingConstraint: return "MissingConstraint";
    case ErrorCode::kNotLocalizable: return "NotLocalizable";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kTimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::kNotDetectable: return "NotDetectable";
    case ErrorCode::kUnstablePole: return "UnstablePole";
    case ErrorCode::kRiccatiDiverged: return "RiccatiDiverged";
    case ErrorCode::kDefectiveW: return "DefectiveW";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kRoleMismatch: return "RoleMismatch";
    case ErrorCode::kMissingNeighbor: return "MissingNeighbor";
    case ErrorCode::kMissingEdgeEstimate: return "MissingEdgeEstimate";
    case ErrorCode::kZetaViolated: return "ZetaViolated";
    case ErrorCode::kNumericalBlowup: return "NumericalBlowup";
    case ErrorCode::kBoundViolated: return "BoundViolated";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kRegressionMismatch: return "RegressionMismatch";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError:
    case ErrorCode::kValidationError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kMissingConstraint:
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kTimeOutOfRange:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kRoleMismatch:
    case ErrorCode::kMissingNeighbor:
    case ErrorCode::kMissingEdgeEstimate:
      return 1;
    case ErrorCode::kNullSpaceEmpty:
    case ErrorCode::kDegenerateGeometry:
    case ErrorCode::kNotLocalizable:
    case ErrorCode::kNotDetectable:
    case ErrorCode::kUnstablePole:
    case ErrorCode::kRiccatiDiverged:
    case ErrorCode::kDefectiveW:
      return 2;
    case ErrorCode::kZetaViolated:
    case ErrorCode::kNumericalBlowup:
    case ErrorCode::kBoundViolated:
      return 3;
    case ErrorCode::kRegressionMismatch:
      return 4;
  }
  return 1;
}

}  // namespace formctl
