#pragma once

#include "gnssfgo/baselines.hpp"
#include "gnssfgo/doppler_velocity.hpp"
#include "gnssfgo/factor_graph.hpp"
#include "gnssfgo/measurement_model.hpp"
#include "gnssfgo/solution.hpp"
#include "gnssfgo/types.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace gnssfgo {

enum class Method { Wls, Ekf, Fgo, RtkEkf, RtkFgo };

Method parse_method(std::string_view text);
std::string_view to_string(Method method);
bool is_rtk(Method method);

struct PipelineOptions {
  WeightConfig weights;
  double doppler_sign = -1.0;
  // 0 = full batch.
  int window = 0;
  double ratio_threshold = lambda::kDefaultRatioThreshold;
  RobustKernel robust = RobustKernel::None;
  double huber_k = 1.345;
  double max_gap_s = 5.0;
  double velocity_cov_inflation = 2.0;
  // RTK-FGO: tie each satellite's DD ambiguity across consecutive epochs.
  bool link_ambiguities = false;
  int max_iter = 50;
  // Remaining filter tuning; weights and ratio threshold come from above.
  EkfOptions ekf;
  bool diagonal_dd_cov = false;
};

EkfOptions ekf_options(const PipelineOptions& options);
GraphOptions graph_options(const PipelineOptions& options);
LmOptions lm_options(const PipelineOptions& options);
DdOptions dd_options(const PipelineOptions& options);

/// Doppler velocity per epoch at the given approximate positions; entries are
/// empty where the position is unknown or the solve fails.
std::vector<std::optional<VelocitySolution>> doppler_solutions(
    const std::vector<Epoch>& epochs, const std::vector<std::optional<Vec3>>& positions,
    const PipelineOptions& options);

/// wls_spp per epoch; empty where it fails.
std::vector<std::optional<Vec3>> wls_positions(const std::vector<Epoch>& epochs,
                                               const PipelineOptions& options);

std::vector<SolutionRecord> run_wls(const std::vector<Epoch>& epochs, const PipelineOptions& options = {});
std::vector<SolutionRecord> run_ekf(const std::vector<Epoch>& epochs, const PipelineOptions& options = {});
std::vector<SolutionRecord> run_fgo(const std::vector<Epoch>& epochs, const PipelineOptions& options = {});

/// Rover/base pairs matched by time (within half the rover interval), with
/// their double differences. Pairs without any DD are dropped.
struct PairedEpochs {
  std::vector<std::size_t> rover_index;
  std::vector<DdEpoch> dd;
};
PairedEpochs pair_double_differences(const std::vector<Epoch>& rover, const std::vector<Epoch>& base,
                                     const Vec3& base_pos, const PipelineOptions& options);

std::vector<SolutionRecord> run_rtk_ekf(const std::vector<Epoch>& rover, const std::vector<Epoch>& base,
                                        const Vec3& base_pos, const PipelineOptions& options = {});
std::vector<SolutionRecord> run_rtk_fgo(const std::vector<Epoch>& rover, const std::vector<Epoch>& base,
                                        const Vec3& base_pos, const PipelineOptions& options = {});

/// Dispatch; RTK methods require base epochs and a base position.
std::vector<SolutionRecord> run_method(Method method, const std::vector<Epoch>& rover,
                                       const std::vector<Epoch>& base, const std::optional<Vec3>& base_pos,
                                       const PipelineOptions& options = {});

}  // namespace gnssfgo
