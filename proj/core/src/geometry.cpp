#include "gnssfgo/geometry.hpp"

#include "gnssfgo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gnssfgo {

using wgs84::kEccentricitySq;
using wgs84::kSemiMajorAxis;

Geodetic ecef_to_geodetic(const Vec3& pos) {
  const double r = pos.norm();
  if (!(r > 1.0e6)) {
    throw Error(ErrorCode::NearEarthCenter, "position norm " + std::to_string(r) + " m");
  }
  const double p2 = pos.x() * pos.x() + pos.y() * pos.y();
  const double p = std::sqrt(p2);

  // Iterate on z' = z + e^2 N sin(lat) (the RTKLIB formulation).
  double z = pos.z();
  double zk = 0.0;
  double v = kSemiMajorAxis;
  for (int i = 0; i < 10 && std::abs(z - zk) >= 1e-12 * kSemiMajorAxis; ++i) {
    zk = z;
    const double sinp = z / std::sqrt(p2 + z * z);
    v = kSemiMajorAxis / std::sqrt(1.0 - kEccentricitySq * sinp * sinp);
    z = pos.z() + v * kEccentricitySq * sinp;
  }
  Geodetic geo;
  if (p2 > 1e-12) {
    geo.lat_rad = std::atan(z / p);
    geo.lon_rad = std::atan2(pos.y(), pos.x());
  } else {
    geo.lat_rad = pos.z() > 0.0 ? std::numbers::pi / 2 : -std::numbers::pi / 2;
    geo.lon_rad = 0.0;
  }
  geo.height_m = std::sqrt(p2 + z * z) - v;
  return geo;
}

Vec3 geodetic_to_ecef(const Geodetic& geo) {
  const double sinp = std::sin(geo.lat_rad);
  const double cosp = std::cos(geo.lat_rad);
  const double sinl = std::sin(geo.lon_rad);
  const double cosl = std::cos(geo.lon_rad);
  const double v = kSemiMajorAxis / std::sqrt(1.0 - kEccentricitySq * sinp * sinp);
  return {(v + geo.height_m) * cosp * cosl, (v + geo.height_m) * cosp * sinl,
          (v * (1.0 - kEccentricitySq) + geo.height_m) * sinp};
}

Mat3 ecef_to_enu_rotation(double lat, double lon) {
  const double sinp = std::sin(lat), cosp = std::cos(lat);
  const double sinl = std::sin(lon), cosl = std::cos(lon);
  Mat3 r;
  r << -sinl, cosl, 0.0,
       -sinp * cosl, -sinp * sinl, cosp,
        cosp * cosl, cosp * sinl, sinp;
  return r;
}

EnuFrame::EnuFrame(const Vec3& origin_ecef) : origin_(origin_ecef) {
  const Geodetic geo = ecef_to_geodetic(origin_ecef);
  rotation_ = ecef_to_enu_rotation(geo.lat_rad, geo.lon_rad);
}

Vec3 los_unit_vector(const Vec3& sat_pos, const Vec3& rcv_pos) {
  const Vec3 d = sat_pos - rcv_pos;
  const double n = d.norm();
  if (!(n >= 1.0)) {
    throw Error(ErrorCode::DegenerateGeometry, "satellite-receiver separation below 1 m");
  }
  return d / n;
}

double elevation_angle(const Vec3& sat_pos, const Vec3& rcv_pos) {
  const Vec3 e = los_unit_vector(sat_pos, rcv_pos);
  const Geodetic geo = ecef_to_geodetic(rcv_pos);
  const Vec3 enu = ecef_to_enu_rotation(geo.lat_rad, geo.lon_rad) * e;
  return std::atan2(enu.z(), std::hypot(enu.x(), enu.y()));
}

double azimuth_angle(const Vec3& sat_pos, const Vec3& rcv_pos) {
  const Vec3 e = los_unit_vector(sat_pos, rcv_pos);
  const Geodetic geo = ecef_to_geodetic(rcv_pos);
  const Vec3 enu = ecef_to_enu_rotation(geo.lat_rad, geo.lon_rad) * e;
  double az = std::atan2(enu.x(), enu.y());
  if (az < 0.0) az += 2.0 * std::numbers::pi;
  return az;
}

double expected_range_rate(const Vec3& ps, const Vec3& vs, const Vec3& pr, const Vec3& vr) {
  const Vec3 e = los_unit_vector(ps, pr);
  constexpr double k = constants::kEarthRotationRate / constants::kSpeedOfLight;
  return e.dot(vs - vr) +
         k * (vs.y() * pr.x() + ps.y() * vr.x() - ps.x() * vr.y() - vs.x() * pr.y());
}

Vec3 range_rate_velocity_gradient(const Vec3& ps, const Vec3& pr) {
  const Vec3 e = los_unit_vector(ps, pr);
  constexpr double k = constants::kEarthRotationRate / constants::kSpeedOfLight;
  return -e + k * Vec3(ps.y(), -ps.x(), 0.0);
}

}  // namespace gnssfgo
