#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gnssfgo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace constants {
inline constexpr double kSpeedOfLight = 299792458.0;       // m/s
inline constexpr double kEarthRotationRate = 7.2921151467e-5;  // rad/s
inline constexpr double kGpsL1Frequency = 1575.42e6;       // Hz
inline constexpr double kBeidouB1Frequency = 1561.098e6;   // Hz
inline constexpr double kLambdaL1 = kSpeedOfLight / kGpsL1Frequency;
inline constexpr double kLambdaB1 = kSpeedOfLight / kBeidouB1Frequency;
}  // namespace constants

enum class Constellation : std::uint8_t { Gps = 0, Beidou = 1 };

inline constexpr int kNumConstellations = 2;

char constellation_tag(Constellation sys);

/// Carrier wavelength of the single frequency tracked for `sys` (GPS L1, BeiDou B1I).
double carrier_wavelength(Constellation sys);

struct SatId {
  Constellation sys = Constellation::Gps;
  int prn = 0;

  auto operator<=>(const SatId&) const = default;

  /// "G05", "C12".
  std::string str() const;
  static SatId parse(std::string_view text);
};

struct SatObservation {
  SatId sat;
  double pseudorange_m = 0.0;
  std::optional<double> doppler_hz;
  std::optional<double> carrier_phase_cycles;
  double snr_dbhz = 0.0;
  Vec3 sat_pos_m = Vec3::Zero();
  Vec3 sat_vel_mps = Vec3::Zero();
  double sat_clock_bias_m = 0.0;
  double sat_clock_drift_mps = 0.0;
  double iono_corr_m = 0.0;
  double tropo_corr_m = 0.0;
  // Antenna/phase-windup style carrier correction; carried, never modeled.
  double phase_corr_m = 0.0;
  // Simulator truth label. Estimators never read it.
  bool nlos_flag = false;

  /// Pseudorange with satellite clock and atmosphere removed: range + receiver clock.
  double corrected_pseudorange() const {
    return pseudorange_m + sat_clock_bias_m - iono_corr_m - tropo_corr_m;
  }

  double wavelength() const { return carrier_wavelength(sat.sys); }

  bool operator==(const SatObservation&) const = default;
};

struct Epoch {
  double t = 0.0;  // time of week, s
  std::vector<SatObservation> observations;

  bool operator==(const Epoch&) const = default;
};

struct ReceiverState {
  Vec3 pos_m = Vec3::Zero();
  Vec3 vel_mps = Vec3::Zero();
  std::map<Constellation, double> clock_bias_m;
  double clock_drift_mps = 0.0;
  std::map<SatId, double> dd_ambiguities_cycles;

  double clock_for(Constellation sys) const {
    auto it = clock_bias_m.find(sys);
    return it == clock_bias_m.end() ? 0.0 : it->second;
  }
};

struct ValidationLimits {
  double min_pseudorange_m = 1.0e7;
  double max_pseudorange_m = 5.0e7;
  double min_snr_dbhz = 0.0;
  double max_snr_dbhz = 60.0;
};

/// Sorts observations by (constellation, PRN) and rejects duplicates and
/// out-of-range fields.
Epoch validate_epoch(Epoch epoch, const ValidationLimits& limits = {});

/// Distinct constellations present in the epoch, in enum order.
std::vector<Constellation> constellations_in(const Epoch& epoch);

}  // namespace gnssfgo
