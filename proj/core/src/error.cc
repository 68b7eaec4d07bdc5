#include "g2sfusion/error.h"

namespace g2sfusion {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAngleNearPi: return "AngleNearPi";
    case ErrorCode::kGimbalDegenerate: return "GimbalDegenerate";
    case ErrorCode::kNotPsd: return "NotPSD";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonRigidPose: return "NonRigidPose";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyEdgeSet: return "EmptyEdgeSet";
    case ErrorCode::kAllZeroCovisibility: return "AllZeroCovisibility";
    case ErrorCode::kInvalidTrajectory: return "InvalidTrajectory";
    case ErrorCode::kFrameOutOfRange: return "FrameOutOfRange";
    case ErrorCode::kDegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::kSingularBound: return "SingularBound";
    case ErrorCode::kMissingPrediction: return "MissingPrediction";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNonFiniteCost: return "NonFiniteCost";
    case ErrorCode::kInvalidProblem: return "InvalidProblem";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

bool is_solver_error(ErrorCode code) {
  return code == ErrorCode::kSingularSystem || code == ErrorCode::kNonFiniteCost;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ParseError::ParseError(const std::string& source, int line, const std::string& what)
    : Error(ErrorCode::kParseError, source + ":" + std::to_string(line) + ": " + what),
      line_(line) {}

}  // namespace g2sfusion
