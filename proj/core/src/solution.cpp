#include "gnssfgo/solution.hpp"

#include "gnssfgo/error.hpp"

namespace gnssfgo {

std::string_view to_string(SolutionStatus status) {
  switch (status) {
    case SolutionStatus::Wls: return "WLS";
    case SolutionStatus::Ekf: return "EKF";
    case SolutionStatus::Fgo: return "FGO";
    case SolutionStatus::RtkFloat: return "RTK_FLOAT";
    case SolutionStatus::RtkFixed: return "RTK_FIXED";
  }
  return "WLS";
}

SolutionStatus parse_status(std::string_view text) {
  for (auto s : {SolutionStatus::Wls, SolutionStatus::Ekf, SolutionStatus::Fgo,
                 SolutionStatus::RtkFloat, SolutionStatus::RtkFixed}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::ParseError, "unknown solution status '" + std::string(text) + "'");
}

}  // namespace gnssfgo
