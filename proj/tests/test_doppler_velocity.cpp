#include "gnssfgo/doppler_velocity.hpp"
#include "gnssfgo/error.hpp"
#include "gnssfgo/geometry.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace gnssfgo;

namespace {

// Eight satellites with Dopplers forward-generated for a given receiver motion.
Epoch synthetic(const Vec3& pos, const Vec3& vel, double drift, int n = 8) {
  std::mt19937_64 rng(2);
  const EnuFrame f(pos);
  Epoch e;
  for (int i = 0; i < n; ++i) {
    const double az = 0.8 * i, el = 0.3 + 0.15 * i;
    SatObservation o;
    o.sat = {i < 5 ? Constellation::Gps : Constellation::Beidou, i + 1};
    o.sat_pos_m = pos + 2.1e7 * f.rotate_to_ecef(Vec3(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el)));
    o.sat_vel_mps = 3000.0 * test::random_unit(rng);
    o.sat_clock_drift_mps = 1e-3 * (i - 4);
    o.snr_dbhz = 45.0;
    const double rr = expected_range_rate(o.sat_pos_m, o.sat_vel_mps, pos, vel) + drift - o.sat_clock_drift_mps;
    o.doppler_hz = -rr / o.wavelength();
    e.observations.push_back(o);
  }
  return e;
}

}  // namespace

TEST(RangeRateMeasurements, ScalingAndSign) {
  Epoch e;
  SatObservation o;
  o.sat = {Constellation::Gps, 1};
  o.doppler_hz = 0.0;
  e.observations.push_back(o);
  o.sat = {Constellation::Gps, 2};
  o.doppler_hz = 100.0;
  e.observations.push_back(o);
  const auto rr = range_rate_measurements(e);
  EXPECT_EQ(rr[0].second, 0.0);
  EXPECT_DOUBLE_EQ(rr[1].second, -constants::kLambdaL1 * 100.0);
  EXPECT_DOUBLE_EQ(range_rate_measurements(e, 1.0)[1].second, constants::kLambdaL1 * 100.0);
  e.observations[0].doppler_hz.reset();
  EXPECT_THROW(range_rate_measurements(e), Error);
}

TEST(SolveVelocity, RecoversExactMotion) {
  const Vec3 pos = test::hong_kong();
  const Vec3 vel(10.0, -5.0, 0.2);
  const VelocitySolution s = solve_velocity(synthetic(pos, vel, 3.0), pos);
  EXPECT_LT((s.vel_mps - vel).norm(), 1e-6);
  EXPECT_NEAR(s.clock_drift_mps, 3.0, 1e-6);
  EXPECT_EQ(s.n_sats, 8);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(s.covariance);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-9);
  EXPECT_LT((s.covariance - s.covariance.transpose()).norm(), 1e-15);
}

TEST(SolveVelocity, StationaryGivesZero) {
  const Vec3 pos = test::hong_kong();
  const VelocitySolution s = solve_velocity(synthetic(pos, Vec3::Zero(), 0.0), pos);
  EXPECT_LT(s.vel_mps.norm(), 1e-8);
  EXPECT_LT(std::abs(s.clock_drift_mps), 1e-8);
}

TEST(SolveVelocity, ThreeSatellitesInsufficient) {
  const Vec3 pos = test::hong_kong();
  try {
    solve_velocity(synthetic(pos, Vec3::Zero(), 0.0, 3), pos);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSatellites);
  }
}

TEST(SolveVelocity, ConstantOffsetGoesToDrift) {
  const Vec3 pos = test::hong_kong();
  Epoch e = synthetic(pos, Vec3(1, 2, 3), 0.5);
  // Add noise so the fit is not exact, then shift every range rate by k.
  std::mt19937_64 rng(6);
  for (auto& o : e.observations) *o.doppler_hz += std::normal_distribution<double>(0, 0.5)(rng);
  const VelocitySolution a = solve_velocity(e, pos);
  const double k = 7.25;
  for (auto& o : e.observations) *o.doppler_hz -= k / o.wavelength();
  const VelocitySolution b = solve_velocity(e, pos);
  EXPECT_NEAR(b.clock_drift_mps - a.clock_drift_mps, k, 1e-9);
  EXPECT_LT((b.vel_mps - a.vel_mps).norm(), 1e-9);
}

TEST(SolveVelocity, ResidualsOrthogonalToWeightedColumns) {
  const Vec3 pos = test::hong_kong();
  Epoch e = synthetic(pos, Vec3(4, 0, -1), 1.0);
  std::mt19937_64 rng(16);
  for (auto& o : e.observations) *o.doppler_hz += std::normal_distribution<double>(0, 1.0)(rng);
  const DopplerOptions opt;
  const VelocitySolution s = solve_velocity(e, pos, opt);
  Eigen::Vector4d g = Eigen::Vector4d::Zero();
  for (std::size_t i = 0; i < e.observations.size(); ++i) {
    const auto& o = e.observations[i];
    Eigen::Vector4d row;
    row.head<3>() = range_rate_velocity_gradient(o.sat_pos_m, pos);
    row(3) = 1.0;
    const double w = 1.0 / weighting_variance(opt.weights, elevation_angle(o.sat_pos_m, pos), o.snr_dbhz);
    g += row * w * s.residuals_mps[i].second;
  }
  EXPECT_LT(g.norm(), 1e-6);
}

TEST(SolveVelocity, SimulatorRangeRates) {
  const Scenario sc = test::zero_noise_scenario(2, false, 3);
  for (std::size_t k = 0; k < sc.rover.size(); ++k) {
    const auto& truth = sc.truth.epochs[k].state;
    const VelocitySolution s = solve_velocity(sc.rover[k], truth.pos_m);
    EXPECT_LT((s.vel_mps - truth.vel_mps).norm(), 1e-6);
    EXPECT_NEAR(s.clock_drift_mps, truth.clock_drift_mps, 1e-6);
  }
}
