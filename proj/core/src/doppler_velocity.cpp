#include "gnssfgo/doppler_velocity.hpp"

#include "gnssfgo/error.hpp"
#include "gnssfgo/geometry.hpp"

namespace gnssfgo {

std::vector<std::pair<SatId, double>> range_rate_measurements(const Epoch& epoch,
                                                              double doppler_sign) {
  std::vector<std::pair<SatId, double>> out;
  out.reserve(epoch.observations.size());
  for (const auto& o : epoch.observations) {
    if (!o.doppler_hz) throw Error(ErrorCode::MissingDoppler, o.sat.str());
    out.emplace_back(o.sat, doppler_sign * o.wavelength() * *o.doppler_hz);
  }
  return out;
}

VelocitySolution solve_velocity(const Epoch& epoch, const Vec3& rcv_pos,
                                const DopplerOptions& opt) {
  std::vector<const SatObservation*> used;
  for (const auto& o : epoch.observations) {
    if (o.doppler_hz) used.push_back(&o);
  }
  if (used.size() < 4) {
    throw Error(ErrorCode::InsufficientSatellites,
                std::to_string(used.size()) + " Doppler measurements, need 4");
  }

  constexpr double k = constants::kEarthRotationRate / constants::kSpeedOfLight;
  const auto m = static_cast<Eigen::Index>(used.size());
  Eigen::MatrixXd A(m, 4);
  Eigen::VectorXd y(m), w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const SatObservation& o = *used[i];
    const Vec3& ps = o.sat_pos_m;
    const Vec3& vs = o.sat_vel_mps;
    const Vec3 e = los_unit_vector(ps, rcv_pos);
    // Range rate is affine in (v_r, drift): split off the part that does not
    // depend on the receiver velocity.
    const double rr_fixed = e.dot(vs) + k * (vs.y() * rcv_pos.x() - vs.x() * rcv_pos.y());
    A.block<1, 3>(i, 0) = range_rate_velocity_gradient(ps, rcv_pos).transpose();
    A(i, 3) = 1.0;
    y(i) = opt.doppler_sign * o.wavelength() * *o.doppler_hz - rr_fixed + o.sat_clock_drift_mps;
    w(i) = 1.0 / weighting_variance(opt.weights, elevation_angle(ps, rcv_pos), o.snr_dbhz);
  }

  const Eigen::Matrix4d N = A.transpose() * w.asDiagonal() * A;
  const Eigen::Vector4d rhs = A.transpose() * w.asDiagonal() * y;
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(N);
  const double smin = svd.singularValues()(3);
  if (!(smin > 0.0) || svd.singularValues()(0) / smin > opt.max_condition) {
    throw Error(ErrorCode::SingularGeometry, "Doppler normal matrix ill-conditioned");
  }
  Eigen::LDLT<Eigen::Matrix4d> ldlt(N);
  const Eigen::Vector4d x = ldlt.solve(rhs);

  VelocitySolution sol;
  sol.vel_mps = x.head<3>();
  sol.clock_drift_mps = x(3);
  sol.covariance = ldlt.solve(Eigen::Matrix4d::Identity());
  sol.covariance = 0.5 * (sol.covariance + sol.covariance.transpose()).eval();
  sol.n_sats = static_cast<int>(m);
  const Eigen::VectorXd r = y - A * x;
  for (Eigen::Index i = 0; i < m; ++i) sol.residuals_mps.emplace_back(used[i]->sat, r(i));
  return sol;
}

}  // namespace gnssfgo
