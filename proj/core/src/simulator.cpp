#include "gnssfgo/simulator.hpp"

#include "gnssfgo/error.hpp"
#include "gnssfgo/rng.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gnssfgo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct SatTrack {
  SatId id;
  Vec3 p0 = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double clock0_m = 0.0;
  double clock_drift_mps = 0.0;
  double iono_m = 0.0;

  Vec3 pos(double dt, double rate) const {
    return Eigen::AngleAxisd(rate * dt, axis) * p0;
  }
  Vec3 vel(double dt, double rate) const { return rate * axis.cross(pos(dt, rate)); }
};

std::vector<SatTrack> make_constellation(const ScenarioConfig& cfg, const Vec3& origin,
                                         const EnuFrame& frame) {
  std::vector<SatTrack> sats;
  const int n = cfg.n_sats_per_constellation;
  const double el_lo = cfg.min_elevation_deg * kDeg;
  const double el_hi = 85.0 * kDeg;
  for (std::size_t ci = 0; ci < cfg.constellations.size(); ++ci) {
    const Constellation sys = cfg.constellations[ci];
    for (int i = 0; i < n; ++i) {
      SatTrack s;
      s.id = SatId{sys, i + 1};
      Rng rng(cfg.seed, 0, s.id, RngChannel::Geometry);
      // Stratified elevations, scrambled azimuths.
      const double el = el_lo + (el_hi - el_lo) * (i + rng.uniform()) / n;
      const double az = std::fmod(2.0 * std::numbers::pi * (0.618034 * i + 0.37 * static_cast<double>(ci)) +
                                      rng.uniform(0.0, 0.6),
                                  2.0 * std::numbers::pi);
      const Vec3 u_enu(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el));
      const Vec3 u = frame.rotate_to_ecef(u_enu);
      const double b = origin.dot(u);
      const double c = origin.squaredNorm() - cfg.sat_shell_radius_m * cfg.sat_shell_radius_m;
      s.p0 = origin + (-b + std::sqrt(b * b - c)) * u;
      const Vec3 r(rng.normal(), rng.normal(), rng.normal());
      s.axis = s.p0.cross(r).normalized();
      s.clock0_m = rng.uniform(-cfg.sat_clock_max_m, cfg.sat_clock_max_m);
      s.clock_drift_mps = rng.uniform(-1e-3, 1e-3);
      s.iono_m = cfg.iono_m * rng.uniform(0.5, 1.5);
      sats.push_back(s);
    }
  }
  return sats;
}

struct Kinematics {
  Vec3 pos_enu = Vec3::Zero();
  Vec3 vel_enu = Vec3::Zero();
};

Kinematics trajectory_at(const TrajectoryConfig& tr, double dt) {
  Kinematics k;
  if (tr.kind == TrajectoryKind::Static || tr.waypoints_enu.empty()) {
    if (!tr.waypoints_enu.empty()) k.pos_enu = tr.waypoints_enu.front();
    return k;
  }
  const auto& P = tr.waypoints_enu;
  const std::size_t n = P.size();
  std::vector<double> len(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += len[i] = (P[(i + 1) % n] - P[i]).norm();
  double s = std::fmod(tr.speed_mps * dt, total);
  std::size_t i = 0;
  while (s >= len[i] && i + 1 < n) s -= len[i++];
  const double u = s / len[i];
  const Vec3& p0 = P[(i + n - 1) % n];
  const Vec3& p1 = P[i];
  const Vec3& p2 = P[(i + 1) % n];
  const Vec3& p3 = P[(i + 2) % n];
  const Vec3 a = 2.0 * p1;
  const Vec3 b = p2 - p0;
  const Vec3 c = 2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3;
  const Vec3 d = -p0 + 3.0 * p1 - 3.0 * p2 + p3;
  k.pos_enu = 0.5 * (a + b * u + c * u * u + d * u * u * u);
  const Vec3 dpdu = 0.5 * (b + 2.0 * c * u + 3.0 * d * u * u);
  k.vel_enu = dpdu * (tr.speed_mps / len[i]);
  return k;
}

struct ReceiverSim {
  int index = 0;
  bool nlos = false;
  std::map<SatId, std::int64_t> ambiguities;
  Rng clock_rng{0};
  double clock_rw = 0.0;
  double clock0 = 0.0;

  struct NlosState {
    double phase = 0.0;
    long block = -1;
    bool on = false;
    double bias = 0.0;
  };
  std::map<SatId, NlosState> nlos_state;
  std::map<SatId, Rng> code, carrier, doppler, snr, nlos_rng;
};

Rng stream(const ScenarioConfig& cfg, int rcv, SatId sat, RngChannel ch) {
  return Rng(cfg.seed, rcv, sat, ch);
}

ReceiverSim make_receiver(const ScenarioConfig& cfg, int index, bool nlos, double clock0,
                          const std::vector<SatTrack>& sats,
                          const std::map<SatId, std::int64_t>& given) {
  ReceiverSim r;
  r.index = index;
  r.nlos = nlos;
  r.clock_rng = stream(cfg, index, SatId{Constellation::Gps, 0}, RngChannel::Clock);
  r.clock0 = clock0;
  for (const auto& s : sats) {
    auto it = given.find(s.id);
    if (it != given.end()) {
      r.ambiguities[s.id] = it->second;
    } else {
      Rng amb = stream(cfg, index, s.id, RngChannel::Ambiguity);
      r.ambiguities[s.id] = amb.uniform_int(-1000, 1000);
    }
    r.code.emplace(s.id, stream(cfg, index, s.id, RngChannel::Code));
    r.carrier.emplace(s.id, stream(cfg, index, s.id, RngChannel::Carrier));
    r.doppler.emplace(s.id, stream(cfg, index, s.id, RngChannel::Doppler));
    r.snr.emplace(s.id, stream(cfg, index, s.id, RngChannel::Snr));
    Rng nl = stream(cfg, index, s.id, RngChannel::Nlos);
    ReceiverSim::NlosState st;
    st.phase = nl.uniform(0.0, cfg.nlos.dwell_s);
    r.nlos_state[s.id] = st;
    r.nlos_rng.emplace(s.id, std::move(nl));
  }
  return r;
}

}  // namespace

int ScenarioConfig::num_epochs() const {
  return static_cast<int>(std::floor(duration_s * rate_hz + 1e-9));
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (!(duration_s > 0.0) || !(rate_hz > 0.0)) fail("duration and rate must be positive");
  if (num_epochs() < 1) fail("scenario has no epochs");
  if (constellations.empty()) fail("no constellations");
  if (n_sats_per_constellation < 2 || n_sats_per_constellation > 32) {
    fail("n_sats_per_constellation must be in [2, 32]");
  }
  if (!(sat_shell_radius_m > 1.5e7)) fail("satellite shell radius too small");
  if (!(min_elevation_deg > 0.0 && min_elevation_deg < 85.0)) fail("min elevation outside (0, 85)");
  if (!(nlos.prob_per_sat_epoch >= 0.0 && nlos.prob_per_sat_epoch <= 1.0)) {
    fail("NLOS probability outside [0, 1]");
  }
  if (!(nlos.bias_min_m >= 0.0 && nlos.bias_max_m >= nlos.bias_min_m)) fail("bad NLOS bias range");
  if (!(nlos.dwell_s > 0.0)) fail("NLOS dwell must be positive");
  if (trajectory.kind == TrajectoryKind::WaypointSpline) {
    if (trajectory.waypoints_enu.size() < 3) fail("spline trajectory needs 3 waypoints");
    if (!(trajectory.speed_mps > 0.0)) fail("trajectory speed must be positive");
  }
  noise.weights.code.validate();
  noise.weights.carrier.validate();
  noise.weights.doppler.validate();
}

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario out;
  const Vec3 origin = geodetic_to_ecef(cfg.origin);
  const EnuFrame frame(origin);
  const std::vector<SatTrack> sats = make_constellation(cfg, origin, frame);

  out.truth.origin_m = origin;
  out.truth.rover_ambiguities.clear();
  std::vector<ReceiverSim> receivers;
  receivers.push_back(make_receiver(cfg, 0, true, cfg.clock.initial_bias_m, sats, cfg.true_ambiguities));
  if (cfg.base_station_enu) {
    receivers.push_back(make_receiver(cfg, 1, false, -0.5 * cfg.clock.initial_bias_m, sats,
                                      cfg.base_ambiguities));
    out.truth.base_pos_m = frame.to_ecef(*cfg.base_station_enu);
    out.truth.base_ambiguities = receivers[1].ambiguities;
  }
  out.truth.rover_ambiguities = receivers[0].ambiguities;

  const double noise_on = cfg.noise.enabled ? 1.0 : 0.0;
  const int n_epochs = cfg.num_epochs();
  const double dt_step = 1.0 / cfg.rate_hz;

  for (int k = 0; k < n_epochs; ++k) {
    const double dt = k * dt_step;
    const double t = cfg.t0 + dt;

    for (auto& rcv : receivers) {
      Vec3 pos, vel;
      if (rcv.index == 0) {
        const Kinematics kin = trajectory_at(cfg.trajectory, dt);
        pos = frame.to_ecef(kin.pos_enu);
        vel = frame.rotate_to_ecef(kin.vel_enu);
      } else {
        pos = *out.truth.base_pos_m;
        vel = Vec3::Zero();
      }
      if (k > 0) rcv.clock_rw += rcv.clock_rng.normal(cfg.clock.random_walk_sigma_m * std::sqrt(dt_step));
      const double clk_gps = rcv.clock0 + cfg.clock.drift_mps * dt + rcv.clock_rw;
      auto clock_of = [&](Constellation sys) {
        return sys == Constellation::Gps ? clk_gps : clk_gps + cfg.clock.beidou_offset_m;
      };

      Epoch ep;
      ep.t = t;
      TruthEpoch truth;
      truth.t = t;
      for (const auto& s : sats) {
        const Vec3 ps = s.pos(dt, cfg.sat_drift_rate);
        const Vec3 vs = s.vel(dt, cfg.sat_drift_rate);
        const double el = elevation_angle(ps, pos);
        const double range = (ps - pos).norm();
        const double sat_clk = s.clock0_m + s.clock_drift_mps * dt;
        const double tropo = cfg.tropo_m / std::sin(elevation_angle(ps, origin));
        const double lambda = carrier_wavelength(s.id.sys);
        const double clk = clock_of(s.id.sys);

        bool nlos = false;
        double nlos_bias = 0.0;
        if (rcv.nlos && cfg.nlos.prob_per_sat_epoch > 0.0) {
          auto& st = rcv.nlos_state[s.id];
          const long block = static_cast<long>(std::floor((dt + st.phase) / cfg.nlos.dwell_s));
          if (block != st.block) {
            st.block = block;
            Rng& r = rcv.nlos_rng.at(s.id);
            const double p = std::min(1.0, cfg.nlos.prob_per_sat_epoch *
                                               (el < cfg.nlos.elevation_mask_deg * kDeg ? 2.0 : 1.0));
            st.on = r.bernoulli(p);
            st.bias = r.uniform(cfg.nlos.bias_min_m, cfg.nlos.bias_max_m);
          }
          nlos = st.on;
          nlos_bias = st.on ? st.bias : 0.0;
        }

        const double snr_clean = cfg.noise.snr_horizon_dbhz +
                                 (cfg.noise.snr_zenith_dbhz - cfg.noise.snr_horizon_dbhz) * std::sin(el);
        const double snr_draw = rcv.snr.at(s.id).normal(cfg.noise.snr_sigma_dbhz);
        double snr = snr_clean + noise_on * snr_draw - (nlos ? cfg.nlos.snr_drop_dbhz : 0.0);
        snr = std::clamp(snr, 10.0, 55.0);

        const double code_n = rcv.code.at(s.id).normal();
        const double carr_n = rcv.carrier.at(s.id).normal();
        const double dop_n = rcv.doppler.at(s.id).normal();
        const double sig_code = std::sqrt(measurement_variance(cfg.noise.weights.code, el, snr));
        const double sig_carr = std::sqrt(measurement_variance(cfg.noise.weights.carrier, el, snr));
        const double sig_dop = std::sqrt(measurement_variance(cfg.noise.weights.doppler, el, snr));

        SatObservation o;
        o.sat = s.id;
        o.sat_pos_m = ps;
        o.sat_vel_mps = vs;
        o.sat_clock_bias_m = sat_clk;
        o.sat_clock_drift_mps = s.clock_drift_mps;
        o.iono_corr_m = s.iono_m;
        o.tropo_corr_m = tropo;
        o.snr_dbhz = snr;
        o.nlos_flag = nlos;
        o.pseudorange_m =
            range + clk - sat_clk + s.iono_m + tropo + noise_on * sig_code * code_n + nlos_bias;
        const double carrier_m = range + clk - sat_clk - s.iono_m + tropo +
                                 lambda * static_cast<double>(rcv.ambiguities.at(s.id)) +
                                 noise_on * sig_carr * carr_n;
        o.carrier_phase_cycles = carrier_m / lambda;
        const double rr = expected_range_rate(ps, vs, pos, vel) + cfg.clock.drift_mps -
                          s.clock_drift_mps + noise_on * sig_dop * dop_n;
        o.doppler_hz = -rr / lambda;
        ep.observations.push_back(o);
        truth.nlos[s.id] = nlos;
      }

      if (rcv.index == 0) {
        truth.state.pos_m = pos;
        truth.state.vel_mps = vel;
        truth.state.clock_drift_mps = cfg.clock.drift_mps;
        for (auto sys : cfg.constellations) truth.state.clock_bias_m[sys] = clock_of(sys);
        out.truth.epochs.push_back(std::move(truth));
        out.rover.push_back(std::move(ep));
      } else {
        out.base.push_back(std::move(ep));
      }
    }
  }
  return out;
}

Severity parse_severity(std::string_view text) {
  if (text == "low") return Severity::Low;
  if (text == "mid") return Severity::Mid;
  if (text == "high") return Severity::High;
  throw Error(ErrorCode::InvalidConfig, "unknown severity '" + std::string(text) + "'");
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::Low: return "low";
    case Severity::Mid: return "mid";
    case Severity::High: return "high";
  }
  return "unknown";
}

ScenarioConfig urban_canyon_preset(Severity severity, std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  c.duration_s = 200.0;
  c.rate_hz = 1.0;
  c.trajectory.kind = TrajectoryKind::WaypointSpline;
  c.trajectory.waypoints_enu = {Vec3(0, 0, 0),     Vec3(150, 0, 0),  Vec3(180, 60, 0),
                                Vec3(150, 120, 0), Vec3(0, 120, 0),  Vec3(-30, 60, 0)};
  c.trajectory.speed_mps = 8.0;
  c.noise.weights.code.sigma0_m = 1.5;
  c.nlos.elevation_mask_deg = 30.0;
  switch (severity) {
    case Severity::High:
      c.nlos.prob_per_sat_epoch = 0.30;
      c.nlos.bias_min_m = 10.0;
      c.nlos.bias_max_m = 80.0;
      break;
    case Severity::Mid:
      c.nlos.prob_per_sat_epoch = 0.15;
      c.nlos.bias_min_m = 5.0;
      c.nlos.bias_max_m = 40.0;
      break;
    case Severity::Low:
      c.nlos.prob_per_sat_epoch = 0.05;
      c.nlos.bias_min_m = 2.0;
      c.nlos.bias_max_m = 15.0;
      break;
  }
  return c;
}

ScenarioConfig static_rtk_preset(std::uint64_t seed) {
  ScenarioConfig c = urban_canyon_preset(Severity::Mid, seed);
  c.trajectory = TrajectoryConfig{};
  c.noise.weights = WeightConfig{};
  c.base_station_enu = Vec3(40.0, 30.0, 0.0);
  return c;
}

ScenarioConfig without_noise(ScenarioConfig config) {
  config.noise.enabled = false;
  config.nlos.prob_per_sat_epoch = 0.0;
  config.clock.random_walk_sigma_m = 0.0;
  return config;
}

}  // namespace gnssfgo
