#include "gnssfgo/baselines.hpp"

#include "gnssfgo/error.hpp"
#include "gnssfgo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace gnssfgo {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double elevation_or_zenith(const Vec3& sat_pos, const Vec3& rcv_pos) {
  if (rcv_pos.norm() < 1.0e6) return std::numbers::pi / 2;
  return elevation_angle(sat_pos, rcv_pos);
}

Index clock_index(Constellation sys) {
  return ekf_layout::kClock + static_cast<Index>(sys);
}

void symmetrize(MatrixXd& P) { P = 0.5 * (P + P.transpose()).eval(); }

// Local-level white acceleration density rotated into ECEF.
Mat3 acceleration_density(const Vec3& pos, const EkfOptions& opt) {
  Mat3 q_enu = Mat3::Zero();
  q_enu.diagonal() << opt.q_acc_h, opt.q_acc_h, opt.q_acc_v;
  if (pos.norm() < 1.0e6) return q_enu;
  const Geodetic geo = ecef_to_geodetic(pos);
  const Mat3 r = ecef_to_enu_rotation(geo.lat_rad, geo.lon_rad);
  return r.transpose() * q_enu * r;
}

// Joseph-form update with a stacked measurement.
void kalman_update(EkfState& s, const MatrixXd& H, const VectorXd& innovation, const MatrixXd& R) {
  const MatrixXd PHt = s.P * H.transpose();
  MatrixXd S = H * PHt + R;
  symmetrize(S);
  const Eigen::LDLT<MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "innovation covariance");
  }
  const MatrixXd K = ldlt.solve(PHt.transpose()).transpose();
  s.x += K * innovation;
  const MatrixXd IKH = MatrixXd::Identity(s.P.rows(), s.P.cols()) - K * H;
  s.P = IKH * s.P * IKH.transpose() + K * R * K.transpose();
  symmetrize(s.P);
}

void velocity_update(EkfState& s, const VelocitySolution& vel, const EkfOptions& opt) {
  MatrixXd H = MatrixXd::Zero(3, s.x.size());
  H.block<3, 3>(0, ekf_layout::kVel).setIdentity();
  const VectorXd innovation = vel.vel_mps - s.vel();
  kalman_update(s, H, innovation, opt.velocity_cov_scale * vel.velocity_covariance());
}

}  // namespace

WlsSolution wls_spp(const Epoch& epoch, const WlsOptions& opt, std::optional<Vec3> init) {
  const auto clocks = constellations_in(epoch);
  const auto m = static_cast<Index>(epoch.observations.size());
  const Index n = 3 + static_cast<Index>(clocks.size());
  if (m < n || clocks.empty()) {
    throw Error(ErrorCode::InsufficientSatellites,
                std::to_string(m) + " satellites for " + std::to_string(n) + " unknowns");
  }
  auto col_of = [&](Constellation sys) {
    return 3 + static_cast<Index>(std::find(clocks.begin(), clocks.end(), sys) - clocks.begin());
  };

  VectorXd x = VectorXd::Zero(n);
  if (init) x.head<3>() = *init;

  WlsSolution sol;
  sol.clocks = clocks;
  MatrixXd A(m, n);
  VectorXd y(m), w(m);
  Eigen::LDLT<MatrixXd> ldlt;
  bool converged = false;
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    const Vec3 pos = x.head<3>();
    A.setZero();
    for (Index i = 0; i < m; ++i) {
      const SatObservation& o = epoch.observations[static_cast<std::size_t>(i)];
      const Vec3 e = los_unit_vector(o.sat_pos_m, pos);
      const Index c = col_of(o.sat.sys);
      A.block<1, 3>(i, 0) = -e.transpose();
      A(i, c) = 1.0;
      y(i) = o.corrected_pseudorange() - ((o.sat_pos_m - pos).norm() + x(c));
      w(i) = 1.0 / weighting_variance(opt.weights, elevation_or_zenith(o.sat_pos_m, pos),
                                      o.snr_dbhz);
    }
    const MatrixXd N = A.transpose() * w.asDiagonal() * A;
    ldlt.compute(N);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0) ||
        ldlt.rcond() < 1e-14) {
      throw Error(ErrorCode::SingularGeometry, "pseudorange normal matrix singular");
    }
    const VectorXd dx = ldlt.solve(A.transpose() * w.asDiagonal() * y);
    x += dx;
    sol.iterations = iter;
    if (dx.norm() < opt.step_tol_m) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence,
                "WLS did not converge in " + std::to_string(opt.max_iter) + " iterations");
  }

  sol.state.pos_m = x.head<3>();
  for (std::size_t k = 0; k < clocks.size(); ++k) {
    sol.state.clock_bias_m[clocks[k]] = x(3 + static_cast<Index>(k));
  }
  sol.covariance = ldlt.solve(MatrixXd::Identity(n, n));
  symmetrize(sol.covariance);
  for (const auto& o : epoch.observations) {
    sol.residuals_m.emplace_back(o.sat, o.corrected_pseudorange() - pseudorange_predict(sol.state, o));
  }
  return sol;
}

EkfState ekf_spp_initialize(const Epoch& epoch, const std::optional<VelocitySolution>& vel,
                            const EkfOptions& opt) {
  WlsOptions wopt;
  wopt.weights = opt.code;
  const WlsSolution wls = wls_spp(epoch, wopt);

  EkfState s;
  s.x = VectorXd::Zero(ekf_layout::kSppDim);
  s.P = MatrixXd::Zero(ekf_layout::kSppDim, ekf_layout::kSppDim);
  s.x.head<3>() = wls.state.pos_m;
  s.P.topLeftCorner<3, 3>() = wls.covariance.topLeftCorner<3, 3>();
  // WLS unknown index for every filter state it covers.
  std::vector<std::pair<Index, Index>> map{{0, 0}, {1, 1}, {2, 2}};
  for (int c = 0; c < kNumConstellations; ++c) {
    const auto sys = static_cast<Constellation>(c);
    const Index idx = clock_index(sys);
    auto it = std::find(wls.clocks.begin(), wls.clocks.end(), sys);
    if (it == wls.clocks.end()) {
      s.P(idx, idx) = opt.unobserved_clock_var;
      continue;
    }
    s.x(idx) = wls.state.clock_bias_m.at(sys);
    map.emplace_back(idx, 3 + (it - wls.clocks.begin()));
  }
  for (const auto& [i, wi] : map)
    for (const auto& [j, wj] : map) s.P(i, j) = wls.covariance(wi, wj);
  if (vel) {
    s.x.segment<3>(ekf_layout::kVel) = vel->vel_mps;
    s.x(ekf_layout::kDrift) = vel->clock_drift_mps;
    s.P.block<4, 4>(ekf_layout::kVel, ekf_layout::kVel).setZero();
    s.P.block<3, 3>(ekf_layout::kVel, ekf_layout::kVel) = vel->velocity_covariance();
    s.P(ekf_layout::kDrift, ekf_layout::kDrift) = vel->covariance(3, 3);
  } else {
    s.P.block<3, 3>(ekf_layout::kVel, ekf_layout::kVel) =
        Mat3::Identity() * opt.init_vel_var;
    s.P(ekf_layout::kDrift, ekf_layout::kDrift) = opt.init_vel_var;
  }
  s.t_last = epoch.t;
  s.initialized = true;
  return s;
}

EkfState ekf_predict(EkfState s, double t, const EkfOptions& opt) {
  if (!s.initialized) throw Error(ErrorCode::NotInitialized, "filter not initialised");
  const double dt = t - s.t_last;
  if (dt < 0.0) {
    throw Error(ErrorCode::TimeReversal,
                "t=" + std::to_string(t) + " before t_last=" + std::to_string(s.t_last));
  }
  if (dt == 0.0) return s;

  const Index n = s.x.size();
  MatrixXd F = MatrixXd::Identity(n, n);
  MatrixXd Q = MatrixXd::Zero(n, n);
  F.block<3, 3>(ekf_layout::kPos, ekf_layout::kVel) = Mat3::Identity() * dt;
  const Mat3 qa = acceleration_density(s.pos(), opt);
  const double dt2 = dt * dt, dt3 = dt2 * dt;
  Q.block<3, 3>(0, 0) = qa * dt3 / 3.0;
  Q.block<3, 3>(0, 3) = qa * dt2 / 2.0;
  Q.block<3, 3>(3, 0) = qa * dt2 / 2.0;
  Q.block<3, 3>(3, 3) = qa * dt;

  if (!s.rtk) {
    const Index d = ekf_layout::kDrift;
    for (int a = 0; a < kNumConstellations; ++a) {
      const Index ia = ekf_layout::kClock + a;
      F(ia, d) = dt;
      Q(ia, d) = Q(d, ia) = opt.q_clk * dt2 / 2.0;
      for (int b = 0; b < kNumConstellations; ++b) {
        Q(ia, ekf_layout::kClock + b) = opt.q_clk * dt3 / 3.0 + (a == b ? opt.q_isb * dt : 0.0);
      }
    }
    Q(d, d) = opt.q_clk * dt;
  } else {
    for (Index i = ekf_layout::kRtkKinematicDim; i < n; ++i) Q(i, i) = opt.q_amb * dt;
  }

  s.x = F * s.x;
  s.P = F * s.P * F.transpose() + Q;
  symmetrize(s.P);
  s.t_last = t;
  return s;
}

std::pair<EkfState, SolutionRecord> ekf_spp_step(EkfState s, const Epoch& epoch,
                                                 const std::optional<VelocitySolution>& vel,
                                                 const EkfOptions& opt) {
  if (!s.initialized) throw Error(ErrorCode::NotInitialized, "filter not initialised");
  s = ekf_predict(std::move(s), epoch.t, opt);

  const VectorXd x_pred = s.x;
  const Vec3 p_pred = x_pred.head<3>();
  VectorXd dx = VectorXd::Zero(s.x.size());
  int used = 0;
  for (const auto& o : epoch.observations) {
    const Vec3 e = los_unit_vector(o.sat_pos_m, p_pred);
    const Index c = clock_index(o.sat.sys);
    Eigen::RowVectorXd H = Eigen::RowVectorXd::Zero(s.x.size());
    H.head<3>() = -e.transpose();
    H(c) = 1.0;
    const double h_pred = (o.sat_pos_m - p_pred).norm() + x_pred(c);
    const double nu = o.corrected_pseudorange() - h_pred - H.dot(dx);
    const double r = weighting_variance(opt.code, elevation_angle(o.sat_pos_m, p_pred), o.snr_dbhz);
    const VectorXd PHt = s.P * H.transpose();
    const double S = H.dot(PHt) + r;
    if (opt.gating && nu * nu / S > opt.gate_chi2) continue;
    const VectorXd K = PHt / S;
    dx += K * nu;
    s.P -= K * PHt.transpose();
    ++used;
  }
  s.x = x_pred + dx;
  symmetrize(s.P);
  if (vel) velocity_update(s, *vel, opt);

  SolutionRecord rec;
  rec.t = epoch.t;
  rec.pos_m = s.pos();
  rec.status = SolutionStatus::Ekf;
  rec.n_sats = used;
  rec.degraded = used < 4;
  return {std::move(s), rec};
}

EkfState ekf_rtk_initialize(const Vec3& init_pos, double t,
                            const std::optional<VelocitySolution>& vel, const EkfOptions& opt) {
  EkfState s;
  s.rtk = true;
  s.x = VectorXd::Zero(ekf_layout::kRtkKinematicDim);
  s.P = MatrixXd::Zero(ekf_layout::kRtkKinematicDim, ekf_layout::kRtkKinematicDim);
  s.x.head<3>() = init_pos;
  s.P.topLeftCorner<3, 3>() = Mat3::Identity() * 100.0;
  if (vel) {
    s.x.segment<3>(3) = vel->vel_mps;
    s.P.block<3, 3>(3, 3) = vel->velocity_covariance();
  } else {
    s.P.block<3, 3>(3, 3) = Mat3::Identity() * opt.init_vel_var;
  }
  s.t_last = t;
  s.initialized = true;
  return s;
}

EkfState ekf_rtk_manage_ambiguities(EkfState s, const DdEpoch& dd, const EkfOptions& opt) {
  std::set<SatId> needed;
  for (const auto& o : dd.obs) {
    if (!o.dd_carrier_m) continue;
    needed.insert(o.sat_id);
    needed.insert(o.master_id);
  }

  // Drop states of satellites no longer tracked.
  std::vector<Index> keep;
  std::vector<SatId> kept_ids;
  for (Index i = 0; i < ekf_layout::kRtkKinematicDim; ++i) keep.push_back(i);
  for (std::size_t k = 0; k < s.ambiguity_ids.size(); ++k) {
    if (needed.count(s.ambiguity_ids[k])) {
      keep.push_back(ekf_layout::kRtkKinematicDim + static_cast<Index>(k));
      kept_ids.push_back(s.ambiguity_ids[k]);
    }
  }
  if (kept_ids.size() != s.ambiguity_ids.size()) {
    const auto nk = static_cast<Index>(keep.size());
    VectorXd x(nk);
    MatrixXd P(nk, nk);
    for (Index i = 0; i < nk; ++i) {
      x(i) = s.x(keep[static_cast<std::size_t>(i)]);
      for (Index j = 0; j < nk; ++j) {
        P(i, j) = s.P(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
      }
    }
    s.x = std::move(x);
    s.P = std::move(P);
    s.ambiguity_ids = std::move(kept_ids);
  }

  auto index_of = [&](const SatId& id) -> std::optional<Index> {
    auto it = std::find(s.ambiguity_ids.begin(), s.ambiguity_ids.end(), id);
    if (it == s.ambiguity_ids.end()) return std::nullopt;
    return ekf_layout::kRtkKinematicDim + (it - s.ambiguity_ids.begin());
  };
  auto append = [&](const SatId& id, double value) {
    const Index n = s.x.size();
    s.x.conservativeResize(n + 1);
    s.x(n) = value;
    s.P.conservativeResizeLike(MatrixXd::Zero(n + 1, n + 1));
    s.P(n, n) = opt.init_amb_var;
    s.ambiguity_ids.push_back(id);
  };
  auto code_minus_carrier = [](const DdObservation& o) {
    return (*o.dd_carrier_m - o.dd_pseudorange_m) / o.wavelength_m;
  };

  for (const auto& o : dd.obs) {
    if (!o.dd_carrier_m || index_of(o.master_id)) continue;
    // The master is new: anchor it to an already tracked satellite if possible.
    double value = 0.0;
    for (const auto& other : dd.obs) {
      if (other.master_id != o.master_id || !other.dd_carrier_m) continue;
      if (auto idx = index_of(other.sat_id)) {
        value = s.x(*idx) - code_minus_carrier(other);
        break;
      }
    }
    append(o.master_id, value);
  }
  for (const auto& o : dd.obs) {
    if (!o.dd_carrier_m || index_of(o.sat_id)) continue;
    append(o.sat_id, s.x(*index_of(o.master_id)) + code_minus_carrier(o));
  }
  return s;
}

std::pair<EkfState, SolutionRecord> ekf_rtk_step(EkfState s, const DdEpoch& dd,
                                                 const Vec3& base_pos,
                                                 const std::optional<VelocitySolution>& vel,
                                                 const EkfOptions& opt) {
  if (!s.initialized) throw Error(ErrorCode::NotInitialized, "filter not initialised");
  if (dd.obs.empty()) {
    throw Error(ErrorCode::InsufficientCommonSatellites, "no double differences");
  }
  s = ekf_predict(std::move(s), dd.t, opt);
  s = ekf_rtk_manage_ambiguities(std::move(s), dd, opt);

  const std::vector<int> cidx = dd.carrier_indices();
  const auto npr = static_cast<Index>(dd.obs.size());
  const auto ncp = static_cast<Index>(cidx.size());
  const Index n = s.x.size();
  const Vec3 p = s.pos();
  auto amb_col = [&](const SatId& id) {
    return ekf_layout::kRtkKinematicDim +
           (std::find(s.ambiguity_ids.begin(), s.ambiguity_ids.end(), id) - s.ambiguity_ids.begin());
  };

  MatrixXd H = MatrixXd::Zero(npr + ncp, n);
  VectorXd nu(npr + ncp);
  MatrixXd R = MatrixXd::Zero(npr + ncp, npr + ncp);
  for (Index i = 0; i < npr; ++i) {
    const auto& o = dd.obs[static_cast<std::size_t>(i)];
    H.block<1, 3>(i, 0) = dd_range_gradient(p, o.sat_pos_m, o.master_pos_m).transpose();
    nu(i) = o.dd_pseudorange_m - dd_range(p, o.sat_pos_m, o.master_pos_m, base_pos);
  }
  R.topLeftCorner(npr, npr) = dd.pseudorange_cov;
  // Carrier rows: one per DD with phase, ambiguity = N_s - N_w (single differences).
  MatrixXd D = MatrixXd::Zero(ncp, n);
  for (Index k = 0; k < ncp; ++k) {
    const auto& o = dd.obs[static_cast<std::size_t>(cidx[static_cast<std::size_t>(k)])];
    const Index row = npr + k;
    D(k, amb_col(o.sat_id)) = 1.0;
    D(k, amb_col(o.master_id)) = -1.0;
    H.block<1, 3>(row, 0) = dd_range_gradient(p, o.sat_pos_m, o.master_pos_m).transpose();
    H.row(row) += o.wavelength_m * D.row(k);
    nu(row) = *o.dd_carrier_m - dd_range(p, o.sat_pos_m, o.master_pos_m, base_pos) -
              o.wavelength_m * D.row(k).dot(s.x);
    for (Index l = 0; l < ncp; ++l) {
      R(row, npr + l) =
          dd.carrier_cov(cidx[static_cast<std::size_t>(k)], cidx[static_cast<std::size_t>(l)]);
    }
  }
  kalman_update(s, H, nu, R);
  if (vel) velocity_update(s, *vel, opt);

  SolutionRecord rec;
  rec.t = dd.t;
  rec.pos_m = s.pos();
  rec.float_pos_m = s.pos();
  rec.status = SolutionStatus::RtkFloat;
  rec.n_sats = static_cast<int>(dd.obs.size());
  if (ncp > 0) {
    const VectorXd a = D * s.x;
    MatrixXd cov(3 + ncp, 3 + ncp);
    cov.topLeftCorner<3, 3>() = s.P.topLeftCorner<3, 3>();
    cov.topRightCorner(3, ncp) = s.P.topRows(3) * D.transpose();
    cov.bottomLeftCorner(ncp, 3) = cov.topRightCorner(3, ncp).transpose();
    cov.bottomRightCorner(ncp, ncp) = D * s.P * D.transpose();
    symmetrize(cov);
    const auto fix = lambda::fix_solution(s.pos(), a, cov, opt.ratio_threshold);
    rec.ratio = fix.ils.ratio;
    if (fix.fixed) {
      rec.pos_m = fix.pos;
      rec.status = SolutionStatus::RtkFixed;
    }
  }
  return {std::move(s), rec};
}

}  // namespace gnssfgo
