#pragma once

#include "gnssfgo/types.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace gnssfgo {

/// Elevation/SNR variance model:
///   sigma^2 = sigma0^2 (a + b / sin^2(el)) 10^((S0 - snr) / k), floored at sigma0^2 a.
struct WeightModel {
  double sigma0_m = 3.0;
  double el_a = 1.0;
  double el_b = 1.0;
  double snr_S0_dbhz = 45.0;
  double snr_k = 30.0;

  void validate() const;
};

/// One weight model per measurement family.
struct WeightConfig {
  WeightModel code{3.0};
  WeightModel carrier{0.01};
  WeightModel doppler{0.1};
};

double measurement_variance(const WeightModel& model, double elevation_rad, double snr_dbhz);

/// Estimator-side variance: elevations are floored at 1 degree so that
/// intermediate iterates with a satellite below the horizon stay usable.
double weighting_variance(const WeightModel& model, double elevation_rad, double snr_dbhz);

/// ||p_s - p_r|| + clock bias of the satellite's constellation.
double pseudorange_predict(const ReceiverState& state, const SatObservation& sat);

struct SatElevation {
  SatId sat;
  double elevation_rad = 0.0;
};

/// Highest elevation wins; ties go to the lowest PRN.
SatId select_master(std::span<const SatElevation> candidates);

struct DdObservation {
  SatId sat_id;
  SatId master_id;
  Vec3 sat_pos_m = Vec3::Zero();
  Vec3 master_pos_m = Vec3::Zero();
  double wavelength_m = constants::kLambdaL1;
  double dd_pseudorange_m = 0.0;
  std::optional<double> dd_carrier_m;
  double pseudorange_var_m2 = 0.0;
  double carrier_var_m2 = 0.0;
};

/// Double differences of one rover/base epoch pair. The covariance matrices
/// are indexed like `obs` and are block diagonal across constellations.
struct DdEpoch {
  double t = 0.0;
  std::vector<DdObservation> obs;
  Eigen::MatrixXd pseudorange_cov;
  Eigen::MatrixXd carrier_cov;

  std::vector<int> carrier_indices() const;
  std::size_t num_carrier() const { return carrier_indices().size(); }
};

struct DdOptions {
  WeightModel code{3.0};
  WeightModel carrier{0.01};
  double interval_s = 1.0;
  bool diagonal_dd_cov = false;
};

/// Forms per-constellation double differences against the highest-elevation
/// common satellite. Elevations are evaluated at the base position.
DdEpoch form_double_differences(const Epoch& rover, const Epoch& base, const Vec3& base_pos,
                                const DdOptions& options = {});

enum class DdKind { Pseudorange, Carrier };

/// (||x - p_s|| - ||b - p_s||) - (||x - p_w|| - ||b - p_w||)
double dd_range(const Vec3& rcv_pos, const Vec3& sat_pos, const Vec3& master_pos,
                const Vec3& base_pos);

/// Gradient of dd_range with respect to the rover position: e_w - e_s.
Vec3 dd_range_gradient(const Vec3& rcv_pos, const Vec3& sat_pos, const Vec3& master_pos);

/// DD prediction for the rover state; the carrier kind adds lambda * dN with dN
/// taken from state.dd_ambiguities_cycles (zero if absent).
double dd_predict(const ReceiverState& state, const DdObservation& dd, const Vec3& base_pos,
                  DdKind kind);

}  // namespace gnssfgo
