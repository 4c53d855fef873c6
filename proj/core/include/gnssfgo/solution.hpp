#pragma once

#include "gnssfgo/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace gnssfgo {

enum class SolutionStatus { Wls, Ekf, Fgo, RtkFloat, RtkFixed };

std::string_view to_string(SolutionStatus status);
SolutionStatus parse_status(std::string_view text);

struct SolutionRecord {
  double t = 0.0;
  Vec3 pos_m = Vec3::Zero();
  SolutionStatus status = SolutionStatus::Wls;
  std::optional<Vec3> enu_error_m;
  int n_sats = 0;
  // Set when an estimator emitted a solution without full measurement support.
  bool degraded = false;
  // RTK only: the float position, kept alongside a fixed one.
  std::optional<Vec3> float_pos_m;
  double ratio = 0.0;
};

}  // namespace gnssfgo
