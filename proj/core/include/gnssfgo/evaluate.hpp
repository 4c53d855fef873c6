#pragma once

#include "gnssfgo/geometry.hpp"
#include "gnssfgo/simulator.hpp"
#include "gnssfgo/solution.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace gnssfgo {

/// Horizontal (EN) error statistics. std is the population deviation.
struct MetricsSummary {
  double mean_m = 0.0;
  double std_m = 0.0;
  double max_m = 0.0;
  double availability_pct = 0.0;
  double fixed_rate_pct = 0.0;
  int n_epochs = 0;
  int n_solutions = 0;
};

/// ENU frame at the first ground-truth position.
EnuFrame truth_frame(const GroundTruth& truth);

/// Fills enu_error_m of each record from the nearest truth epoch (within half
/// the truth interval). Unmatched records keep no error.
void annotate_errors(std::vector<SolutionRecord>& records, const GroundTruth& truth);

MetricsSummary evaluate(const std::vector<SolutionRecord>& records, const GroundTruth& truth);

/// method,mean_m,std_m,max_m,availability_pct,fixed_rate_pct
void write_metrics_table(std::ostream& out,
                         const std::vector<std::pair<std::string, MetricsSummary>>& rows);

}  // namespace gnssfgo
