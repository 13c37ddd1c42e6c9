#include "snpp/common.hpp"

namespace snpp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InclusionTouchesBoundary: return "InclusionTouchesBoundary";
    case ErrorCode::MeshGenerationFailure: return "MeshGenerationFailure";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::DegenerateElement: return "DegenerateElement";
    case ErrorCode::FieldMeshMismatch: return "FieldMeshMismatch";
    case ErrorCode::InconsistentConstraint: return "InconsistentConstraint";
    case ErrorCode::SolverBreakdown: return "SolverBreakdown";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::NoSolidPhase: return "NoSolidPhase";
    case ErrorCode::FormulaMismatch: return "FormulaMismatch";
    case ErrorCode::PointOutsideFluidPart: return "PointOutsideFluidPart";
    case ErrorCode::InadmissibleScaling: return "InadmissibleScaling";
    case ErrorCode::IncompatibleSource: return "IncompatibleSource";
    case ErrorCode::FixedPointDivergence: return "FixedPointDivergence";
    case ErrorCode::GridMisaligned: return "GridMisaligned";
    case ErrorCode::MalformedDiagnostics: return "MalformedDiagnostics";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string where, const std::string& message)
    : std::runtime_error(where + ": " + to_string(code) + ": " + message),
      code_(code),
      where_(std::move(where)) {}

}  // namespace snpp
