#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace formctl {

// Failure categories surfaced by the toolkit. The CLI maps each category onto
// an exit code (see exit_code_for).
enum class ErrorCode {
  kInvalidArgument,
  kNullSpaceEmpty,
  kDegenerateGeometry,
  kMissingConstraint,
  kNotLocalizable,
  kIndexOutOfRange,
  kTimeOutOfRange,
  kNotDetectable,
  kUnstablePole,
  kRiccatiDiverged,
  kDefectiveW,
  kDimensionMismatch,
  kRoleMismatch,
  kMissingNeighbor,
  kMissingEdgeEstimate,
  kZetaViolated,
  kNumericalBlowup,
  kBoundViolated,
  kParseError,
  kValidationError,
  kRegressionMismatch,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the category prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// 0 success, 1 validation, 2 synthesis failure, 3 simulation assertion
// failure, 4 regression mismatch.
int exit_code_for(ErrorCode code);

}  // namespace formctl
