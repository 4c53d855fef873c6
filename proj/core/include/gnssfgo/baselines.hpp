#pragma once

#include "gnssfgo/doppler_velocity.hpp"
#include "gnssfgo/lambda.hpp"
#include "gnssfgo/measurement_model.hpp"
#include "gnssfgo/solution.hpp"
#include "gnssfgo/types.hpp"

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

namespace gnssfgo {

// ---------------------------------------------------------------------------
// Weighted least-squares single point positioning

struct WlsOptions {
  WeightModel weights{3.0};
  int max_iter = 10;
  double step_tol_m = 1e-4;
};

struct WlsSolution {
  ReceiverState state;
  // Unknown order: x, y, z, then one clock per entry of `clocks`.
  Eigen::MatrixXd covariance;
  std::vector<Constellation> clocks;
  std::vector<std::pair<SatId, double>> residuals_m;
  int iterations = 0;
};

/// Gauss-Newton on the pseudorange model. Starts at the earth centre when no
/// initial position is given.
WlsSolution wls_spp(const Epoch& epoch, const WlsOptions& options = {},
                    std::optional<Vec3> init = std::nullopt);

// ---------------------------------------------------------------------------
// Extended Kalman filters

struct EkfOptions {
  WeightModel code{3.0};
  WeightModel carrier{0.01};
  // White acceleration spectral density, m^2/s^3, local horizontal/vertical.
  double q_acc_h = 1.0;
  double q_acc_v = 0.1;
  // Clock drift noise, m^2/s^3.
  double q_clk = 0.1;
  // Independent per-constellation bias noise, m^2/s.
  double q_isb = 0.01;
  // Ambiguity random walk, cycles^2/s (RTK).
  double q_amb = 1e-6;
  double init_amb_var = 100.0;        // cycles^2
  double init_vel_var = 100.0;        // (m/s)^2 when no Doppler solution
  double unobserved_clock_var = 1e8;  // m^2
  double velocity_cov_scale = 1.0;
  // Chi-square innovation gate (0.999 quantile, 1 dof); off by default.
  bool gating = false;
  double gate_chi2 = 10.828;
  double ratio_threshold = lambda::kDefaultRatioThreshold;
  double interval_s = 1.0;
  bool diagonal_dd_cov = false;
};

struct EkfState {
  Eigen::VectorXd x;
  Eigen::MatrixXd P;
  double t_last = 0.0;
  bool initialized = false;
  // RTK: single-difference ambiguity (cycles) for each satellite, stored
  // after the 6 kinematic states in this order.
  std::vector<SatId> ambiguity_ids;
  bool rtk = false;

  Vec3 pos() const { return x.head<3>(); }
  Vec3 vel() const { return x.segment<3>(3); }
};

namespace ekf_layout {
inline constexpr int kPos = 0;
inline constexpr int kVel = 3;
inline constexpr int kClock = 6;  // one per Constellation, enum order
inline constexpr int kDrift = kClock + kNumConstellations;
inline constexpr int kSppDim = kDrift + 1;
inline constexpr int kRtkKinematicDim = 6;
}  // namespace ekf_layout

/// Bootstraps the SPP filter from wls_spp on `epoch`.
EkfState ekf_spp_initialize(const Epoch& epoch, const std::optional<VelocitySolution>& vel_meas,
                            const EkfOptions& options = {});

/// Constant-velocity prediction to epoch.t, then sequential pseudorange and
/// velocity updates linearised once at the predicted state.
std::pair<EkfState, SolutionRecord> ekf_spp_step(EkfState state, const Epoch& epoch,
                                                 const std::optional<VelocitySolution>& vel_meas,
                                                 const EkfOptions& options = {});

/// Predict-only step of either filter.
EkfState ekf_predict(EkfState state, double t, const EkfOptions& options = {});

EkfState ekf_rtk_initialize(const Vec3& init_pos, double t,
                            const std::optional<VelocitySolution>& vel_meas,
                            const EkfOptions& options = {});

/// Adds ambiguity states for satellites that appear in `dd`, drops those that
/// disappeared (row/column removal), then applies the DD update and attempts
/// an integer fix. Single-difference ambiguities are initialised from
/// carrier-minus-code.
std::pair<EkfState, SolutionRecord> ekf_rtk_step(EkfState state, const DdEpoch& dd,
                                                 const Vec3& base_pos,
                                                 const std::optional<VelocitySolution>& vel_meas,
                                                 const EkfOptions& options = {});

/// Reconciles the ambiguity sub-state with the satellites in `dd`.
EkfState ekf_rtk_manage_ambiguities(EkfState state, const DdEpoch& dd,
                                    const EkfOptions& options = {});

}  // namespace gnssfgo
