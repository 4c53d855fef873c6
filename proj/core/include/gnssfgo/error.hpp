#pragma once

#include <stdexcept>
#include <string>

namespace gnssfgo {

enum class ErrorCode {
  DuplicateSatellite,
  FieldOutOfRange,
  NearEarthCenter,
  DegenerateGeometry,
  MissingDoppler,
  InsufficientSatellites,
  SingularGeometry,
  InvalidElevation,
  InsufficientCommonSatellites,
  EpochMismatch,
  NoConvergence,
  NotInitialized,
  TimeReversal,
  EmptyInput,
  GapTooLarge,
  UninitializedNode,
  SingularSystem,
  FixedNode,
  NotPositiveDefinite,
  DimensionTooLarge,
  InvalidConfig,
  ParseError,
  SchemaVersionMismatch,
  NoOverlap,
  IoError,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gnssfgo
