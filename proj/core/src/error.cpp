#include "gnssfgo/error.hpp"

namespace gnssfgo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateSatellite: return "DuplicateSatellite";
    case ErrorCode::FieldOutOfRange: return "FieldOutOfRange";
    case ErrorCode::NearEarthCenter: return "NearEarthCenter";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::MissingDoppler: return "MissingDoppler";
    case ErrorCode::InsufficientSatellites: return "InsufficientSatellites";
    case ErrorCode::SingularGeometry: return "SingularGeometry";
    case ErrorCode::InvalidElevation: return "InvalidElevation";
    case ErrorCode::InsufficientCommonSatellites: return "InsufficientCommonSatellites";
    case ErrorCode::EpochMismatch: return "EpochMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotInitialized: return "NotInitialized";
    case ErrorCode::TimeReversal: return "TimeReversal";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::GapTooLarge: return "GapTooLarge";
    case ErrorCode::UninitializedNode: return "UninitializedNode";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::FixedNode: return "FixedNode";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace gnssfgo
