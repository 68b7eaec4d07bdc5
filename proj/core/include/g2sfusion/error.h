#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace g2sfusion {

enum class ErrorCode {
  kAngleNearPi,
  kGimbalDegenerate,
  kNotPsd,
  kParseError,
  kNonRigidPose,
  kIoError,
  kEmptyEdgeSet,
  kAllZeroCovisibility,
  kInvalidTrajectory,
  kFrameOutOfRange,
  kDegenerateCovariance,
  kSingularBound,
  kMissingPrediction,
  kSingularSystem,
  kNonFiniteCost,
  kInvalidProblem,
  kLengthMismatch,
  kDegenerateGeometry,
  kConfigInvalid,
};

std::string_view to_string(ErrorCode code);

/// Whether the code belongs to the solver family (SingularSystem, NonFiniteCost).
bool is_solver_error(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised while reading text inputs; carries the 1-based offending line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& what);

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace g2sfusion
