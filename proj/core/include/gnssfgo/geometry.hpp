#pragma once

#include "gnssfgo/types.hpp"

namespace gnssfgo {

namespace wgs84 {
inline constexpr double kSemiMajorAxis = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
}  // namespace wgs84

struct Geodetic {
  double lat_rad = 0.0;
  double lon_rad = 0.0;
  double height_m = 0.0;
};

/// Fixed-point iteration on latitude (at most 10 passes, 1e-12 rad convergence).
Geodetic ecef_to_geodetic(const Vec3& pos_ecef);
Vec3 geodetic_to_ecef(const Geodetic& geo);

/// Local east-north-up frame anchored at an ECEF point on the ellipsoid normal.
class EnuFrame {
 public:
  explicit EnuFrame(const Vec3& origin_ecef);

  const Vec3& origin() const { return origin_; }
  /// Rows are the east, north and up unit vectors expressed in ECEF.
  const Mat3& rotation() const { return rotation_; }

  Vec3 to_enu(const Vec3& ecef) const { return rotation_ * (ecef - origin_); }
  Vec3 to_ecef(const Vec3& enu) const { return origin_ + rotation_.transpose() * enu; }
  Vec3 rotate_to_enu(const Vec3& v) const { return rotation_ * v; }
  Vec3 rotate_to_ecef(const Vec3& v) const { return rotation_.transpose() * v; }

 private:
  Vec3 origin_;
  Mat3 rotation_;
};

Mat3 ecef_to_enu_rotation(double lat_rad, double lon_rad);

/// Unit vector from the receiver towards the satellite.
Vec3 los_unit_vector(const Vec3& sat_pos, const Vec3& rcv_pos);

/// Elevation of the satellite above the ellipsoidal tangent plane at the receiver.
double elevation_angle(const Vec3& sat_pos, const Vec3& rcv_pos);

/// Azimuth clockwise from north, in [0, 2pi).
double azimuth_angle(const Vec3& sat_pos, const Vec3& rcv_pos);

/// Geometric range rate plus the earth-rotation term:
///   e.(v_s - v_r) + (w/c)(vs_y pr_x + ps_y vr_x - ps_x vr_y - vs_x pr_y)
double expected_range_rate(const Vec3& sat_pos, const Vec3& sat_vel, const Vec3& rcv_pos,
                           const Vec3& rcv_vel);

/// Derivative of expected_range_rate with respect to the receiver velocity.
Vec3 range_rate_velocity_gradient(const Vec3& sat_pos, const Vec3& rcv_pos);

}  // namespace gnssfgo
