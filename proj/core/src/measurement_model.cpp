#include "gnssfgo/measurement_model.hpp"

#include "gnssfgo/error.hpp"
#include "gnssfgo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gnssfgo {

void WeightModel::validate() const {
  if (!(sigma0_m > 0 && el_a > 0 && el_b > 0 && snr_S0_dbhz > 0 && snr_k > 0)) {
    throw Error(ErrorCode::InvalidConfig, "weight model parameters must all be positive");
  }
}

double measurement_variance(const WeightModel& m, double elevation, double snr) {
  if (!(elevation > 0.0) || elevation > std::numbers::pi / 2 + 1e-12) {
    throw Error(ErrorCode::InvalidElevation, "elevation " + std::to_string(elevation) + " rad");
  }
  const double s = std::sin(elevation);
  const double s0sq = m.sigma0_m * m.sigma0_m;
  const double var =
      s0sq * (m.el_a + m.el_b / (s * s)) * std::pow(10.0, (m.snr_S0_dbhz - snr) / m.snr_k);
  return std::max(var, s0sq * m.el_a);
}

double weighting_variance(const WeightModel& m, double elevation, double snr) {
  constexpr double kMinElevation = std::numbers::pi / 180.0;
  return measurement_variance(m, std::clamp(elevation, kMinElevation, std::numbers::pi / 2), snr);
}

double pseudorange_predict(const ReceiverState& state, const SatObservation& sat) {
  const double range = (sat.sat_pos_m - state.pos_m).norm();
  if (range < 1.0) throw Error(ErrorCode::DegenerateGeometry, "receiver at satellite");
  return range + state.clock_for(sat.sat.sys);
}

SatId select_master(std::span<const SatElevation> candidates) {
  if (candidates.size() < 2) {
    throw Error(ErrorCode::InsufficientCommonSatellites,
                std::to_string(candidates.size()) + " common satellite(s)");
  }
  const auto best = std::min_element(candidates.begin(), candidates.end(),
                                     [](const SatElevation& a, const SatElevation& b) {
                                       if (a.elevation_rad != b.elevation_rad) {
                                         return a.elevation_rad > b.elevation_rad;
                                       }
                                       return a.sat.prn < b.sat.prn;
                                     });
  return best->sat;
}

std::vector<int> DdEpoch::carrier_indices() const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].dd_carrier_m) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

namespace {

struct CommonSat {
  const SatObservation* rover;
  const SatObservation* base;
  double elevation;
};

}  // namespace

DdEpoch form_double_differences(const Epoch& rover, const Epoch& base, const Vec3& base_pos,
                                const DdOptions& opt) {
  if (std::abs(rover.t - base.t) > 0.5 * opt.interval_s) {
    throw Error(ErrorCode::EpochMismatch, "rover t=" + std::to_string(rover.t) +
                                              " base t=" + std::to_string(base.t));
  }
  DdEpoch out;
  out.t = rover.t;

  struct Block {
    std::size_t begin;
    std::vector<double> pr_var;  // [master, sats...] rover+base variance
    std::vector<double> cp_var;
  };
  std::vector<Block> blocks;

  for (Constellation sys : {Constellation::Gps, Constellation::Beidou}) {
    std::vector<CommonSat> common;
    for (const auto& r : rover.observations) {
      if (r.sat.sys != sys) continue;
      auto it = std::find_if(base.observations.begin(), base.observations.end(),
                             [&](const SatObservation& b) { return b.sat == r.sat; });
      if (it == base.observations.end()) continue;
      common.push_back({&r, &*it, elevation_angle(r.sat_pos_m, base_pos)});
    }
    if (common.size() < 2) continue;

    std::vector<SatElevation> els;
    for (const auto& c : common) els.push_back({c.rover->sat, c.elevation});
    const SatId master_id = select_master(els);
    const CommonSat& w = *std::find_if(common.begin(), common.end(),
                                       [&](const CommonSat& c) { return c.rover->sat == master_id; });

    auto code_var = [&](const CommonSat& c) {
      return weighting_variance(opt.code, c.elevation, c.rover->snr_dbhz) +
             weighting_variance(opt.code, c.elevation, c.base->snr_dbhz);
    };
    auto phase_var = [&](const CommonSat& c) {
      return weighting_variance(opt.carrier, c.elevation, c.rover->snr_dbhz) +
             weighting_variance(opt.carrier, c.elevation, c.base->snr_dbhz);
    };
    auto has_phase = [](const CommonSat& c) {
      return c.rover->carrier_phase_cycles && c.base->carrier_phase_cycles;
    };
    auto phase_m = [](const SatObservation& o) {
      return o.wavelength() * *o.carrier_phase_cycles - o.phase_corr_m;
    };

    Block block{out.obs.size(), {code_var(w)}, {phase_var(w)}};
    for (const auto& c : common) {
      if (c.rover->sat == master_id) continue;
      DdObservation dd;
      dd.sat_id = c.rover->sat;
      dd.master_id = master_id;
      dd.sat_pos_m = c.rover->sat_pos_m;
      dd.master_pos_m = w.rover->sat_pos_m;
      dd.wavelength_m = c.rover->wavelength();
      dd.dd_pseudorange_m = (c.rover->pseudorange_m - c.base->pseudorange_m) -
                            (w.rover->pseudorange_m - w.base->pseudorange_m);
      if (has_phase(c) && has_phase(w)) {
        if (c.rover->wavelength() == w.rover->wavelength()) {
          // Difference in cycles first; the large common part cancels before scaling.
          const double cycles = (*c.rover->carrier_phase_cycles - *c.base->carrier_phase_cycles) -
                                (*w.rover->carrier_phase_cycles - *w.base->carrier_phase_cycles);
          const double corr = (c.rover->phase_corr_m - c.base->phase_corr_m) -
                              (w.rover->phase_corr_m - w.base->phase_corr_m);
          dd.dd_carrier_m = dd.wavelength_m * cycles - corr;
        } else {
          dd.dd_carrier_m =
              (phase_m(*c.rover) - phase_m(*c.base)) - (phase_m(*w.rover) - phase_m(*w.base));
        }
      }
      block.pr_var.push_back(code_var(c));
      block.cp_var.push_back(phase_var(c));
      dd.pseudorange_var_m2 = block.pr_var.front() + block.pr_var.back();
      dd.carrier_var_m2 = block.cp_var.front() + block.cp_var.back();
      out.obs.push_back(dd);
    }
    blocks.push_back(std::move(block));
  }

  if (out.obs.empty()) {
    throw Error(ErrorCode::InsufficientCommonSatellites, "no constellation with two common satellites");
  }

  // D diag(sigma^2) D^T: master variance is shared by every row of a block.
  const auto n = static_cast<Eigen::Index>(out.obs.size());
  out.pseudorange_cov = Eigen::MatrixXd::Zero(n, n);
  out.carrier_cov = Eigen::MatrixXd::Zero(n, n);
  for (const auto& b : blocks) {
    const auto m = static_cast<Eigen::Index>(b.pr_var.size() - 1);
    const auto o = static_cast<Eigen::Index>(b.begin);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i != j && opt.diagonal_dd_cov) continue;
        out.pseudorange_cov(o + i, o + j) = b.pr_var[0] + (i == j ? b.pr_var[i + 1] : 0.0);
        out.carrier_cov(o + i, o + j) = b.cp_var[0] + (i == j ? b.cp_var[i + 1] : 0.0);
      }
    }
  }
  return out;
}

double dd_range(const Vec3& x, const Vec3& ps, const Vec3& pw, const Vec3& b) {
  return ((x - ps).norm() - (b - ps).norm()) - ((x - pw).norm() - (b - pw).norm());
}

Vec3 dd_range_gradient(const Vec3& x, const Vec3& ps, const Vec3& pw) {
  return los_unit_vector(pw, x) - los_unit_vector(ps, x);
}

double dd_predict(const ReceiverState& state, const DdObservation& dd, const Vec3& base_pos,
                  DdKind kind) {
  if ((dd.sat_pos_m - state.pos_m).norm() < 1.0 || (dd.master_pos_m - state.pos_m).norm() < 1.0) {
    throw Error(ErrorCode::DegenerateGeometry, "receiver at satellite");
  }
  double value = dd_range(state.pos_m, dd.sat_pos_m, dd.master_pos_m, base_pos);
  if (kind == DdKind::Carrier) {
    auto it = state.dd_ambiguities_cycles.find(dd.sat_id);
    if (it != state.dd_ambiguities_cycles.end()) value += dd.wavelength_m * it->second;
  }
  return value;
}

}  // namespace gnssfgo
