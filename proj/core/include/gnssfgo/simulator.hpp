#pragma once

#include "gnssfgo/geometry.hpp"
#include "gnssfgo/measurement_model.hpp"
#include "gnssfgo/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace gnssfgo {

enum class TrajectoryKind { Static, WaypointSpline };

/// Closed Catmull-Rom loop through ENU waypoints, driven at constant parameter
/// speed along the polyline.
struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::Static;
  std::vector<Vec3> waypoints_enu;
  double speed_mps = 8.0;
};

struct ClockProfile {
  double initial_bias_m = 3000.0;
  double drift_mps = 0.5;
  double random_walk_sigma_m = 0.02;  // per sqrt(s)
  // Added to the BeiDou clock on top of the GPS one.
  double beidou_offset_m = 12.0;
};

// Noise sigmas come from the same weight models the estimators assume.
struct NoiseConfig {
  bool enabled = true;
  WeightConfig weights;
  double snr_zenith_dbhz = 48.0;
  double snr_horizon_dbhz = 32.0;
  double snr_sigma_dbhz = 1.0;
};

struct NlosConfig {
  double prob_per_sat_epoch = 0.0;
  double bias_min_m = 0.0;
  double bias_max_m = 0.0;
  double elevation_mask_deg = 30.0;
  double dwell_s = 5.0;
  double snr_drop_dbhz = 5.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double duration_s = 200.0;
  double rate_hz = 1.0;
  double t0 = 345600.0;
  Geodetic origin{0.3895, 1.9933, 10.0};
  TrajectoryConfig trajectory;
  std::vector<Constellation> constellations{Constellation::Gps, Constellation::Beidou};
  int n_sats_per_constellation = 8;
  double sat_shell_radius_m = 26.6e6;
  double sat_drift_rate = 1.5e-4;  // rad/s
  double min_elevation_deg = 15.0;
  ClockProfile clock;
  NoiseConfig noise;
  NlosConfig nlos;
  double iono_m = 3.0;
  double tropo_m = 2.5;
  double sat_clock_max_m = 3.0e4;
  // Present for RTK scenarios; the base is static at this offset from the origin.
  std::optional<Vec3> base_station_enu;
  // Per-satellite integers; missing entries are drawn at random.
  std::map<SatId, std::int64_t> true_ambiguities;
  std::map<SatId, std::int64_t> base_ambiguities;

  int num_epochs() const;
  void validate() const;
};

struct TruthEpoch {
  double t = 0.0;
  ReceiverState state;
  std::map<SatId, bool> nlos;
};

struct GroundTruth {
  std::vector<TruthEpoch> epochs;
  std::optional<Vec3> base_pos_m;
  std::map<SatId, std::int64_t> rover_ambiguities;
  std::map<SatId, std::int64_t> base_ambiguities;
  Vec3 origin_m = Vec3::Zero();
};

struct Scenario {
  std::vector<Epoch> rover;
  std::vector<Epoch> base;
  GroundTruth truth;
};

Scenario generate(const ScenarioConfig& config);

enum class Severity { Low, Mid, High };

Severity parse_severity(std::string_view text);
std::string_view to_string(Severity severity);

/// Vehicle loop under urban-canyon NLOS levels:
///   high  mask 30 deg, p 0.30, bias 10-80 m
///   mid   mask 30 deg, p 0.15, bias  5-40 m
///   low   mask 30 deg, p 0.05, bias  2-15 m
ScenarioConfig urban_canyon_preset(Severity severity, std::uint64_t seed = 1);

/// Static rover with a base station 50 m away, mid-severity NLOS on the rover.
/// Noise uses the default WeightConfig (urban presets use code sigma0 1.5 m).
ScenarioConfig static_rtk_preset(std::uint64_t seed = 1);

/// Disables measurement noise, NLOS and clock random walk.
ScenarioConfig without_noise(ScenarioConfig config);

}  // namespace gnssfgo
