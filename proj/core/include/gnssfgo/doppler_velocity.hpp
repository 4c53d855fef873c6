#pragma once

#include "gnssfgo/measurement_model.hpp"
#include "gnssfgo/types.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace gnssfgo {

struct DopplerOptions {
  // range_rate = doppler_sign * lambda * doppler_hz. Receivers report positive
  // Doppler for an approaching satellite, hence -1.
  double doppler_sign = -1.0;
  WeightModel weights{0.1};
  double max_condition = 1e12;
};

struct VelocitySolution {
  Vec3 vel_mps = Vec3::Zero();
  double clock_drift_mps = 0.0;
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // (m/s)^2, [vx vy vz drift]
  std::vector<std::pair<SatId, double>> residuals_mps;
  int n_sats = 0;

  Mat3 velocity_covariance() const { return covariance.topLeftCorner<3, 3>(); }
};

std::vector<std::pair<SatId, double>> range_rate_measurements(const Epoch& epoch,
                                                              double doppler_sign = -1.0);

/// Linear weighted LS for receiver velocity and clock drift given an
/// approximate receiver position. One normal-equations solve.
VelocitySolution solve_velocity(const Epoch& epoch, const Vec3& rcv_pos,
                                const DopplerOptions& options = {});

}  // namespace gnssfgo
