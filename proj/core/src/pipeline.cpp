#include "gnssfgo/pipeline.hpp"

#include "gnssfgo/error.hpp"
#include "gnssfgo/lambda.hpp"

#include <algorithm>
#include <cmath>

namespace gnssfgo {

Method parse_method(std::string_view text) {
  if (text == "wls") return Method::Wls;
  if (text == "ekf") return Method::Ekf;
  if (text == "fgo") return Method::Fgo;
  if (text == "rtk-ekf") return Method::RtkEkf;
  if (text == "rtk-fgo") return Method::RtkFgo;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(text) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Wls: return "wls";
    case Method::Ekf: return "ekf";
    case Method::Fgo: return "fgo";
    case Method::RtkEkf: return "rtk-ekf";
    case Method::RtkFgo: return "rtk-fgo";
  }
  return "unknown";
}

bool is_rtk(Method method) { return method == Method::RtkEkf || method == Method::RtkFgo; }

EkfOptions ekf_options(const PipelineOptions& o) {
  EkfOptions e = o.ekf;
  e.code = o.weights.code;
  e.carrier = o.weights.carrier;
  e.ratio_threshold = o.ratio_threshold;
  e.diagonal_dd_cov = o.diagonal_dd_cov;
  return e;
}

GraphOptions graph_options(const PipelineOptions& o) {
  GraphOptions g;
  g.code = o.weights.code;
  g.carrier = o.weights.carrier;
  g.max_gap_s = o.max_gap_s;
  g.velocity_cov_inflation = o.velocity_cov_inflation;
  g.window = o.window;
  g.link_ambiguities = o.link_ambiguities;
  return g;
}

LmOptions lm_options(const PipelineOptions& o) {
  LmOptions l;
  l.max_iter = o.max_iter;
  l.robust = o.robust;
  l.huber_k = o.huber_k;
  return l;
}

DdOptions dd_options(const PipelineOptions& o) {
  DdOptions d;
  d.code = o.weights.code;
  d.carrier = o.weights.carrier;
  d.interval_s = o.ekf.interval_s;
  d.diagonal_dd_cov = o.diagonal_dd_cov;
  return d;
}

std::vector<std::optional<Vec3>> wls_positions(const std::vector<Epoch>& epochs,
                                               const PipelineOptions& options) {
  WlsOptions w;
  w.weights = options.weights.code;
  std::vector<std::optional<Vec3>> out;
  out.reserve(epochs.size());
  for (const auto& ep : epochs) {
    try {
      out.emplace_back(wls_spp(ep, w).state.pos_m);
    } catch (const Error&) {
      out.emplace_back();
    }
  }
  return out;
}

std::vector<std::optional<VelocitySolution>> doppler_solutions(
    const std::vector<Epoch>& epochs, const std::vector<std::optional<Vec3>>& positions,
    const PipelineOptions& options) {
  DopplerOptions d;
  d.doppler_sign = options.doppler_sign;
  d.weights = options.weights.doppler;
  std::vector<std::optional<VelocitySolution>> out(epochs.size());
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (!positions[i]) continue;
    try {
      out[i] = solve_velocity(epochs[i], *positions[i], d);
    } catch (const Error&) {
    }
  }
  return out;
}

std::vector<SolutionRecord> run_wls(const std::vector<Epoch>& epochs, const PipelineOptions& options) {
  WlsOptions w;
  w.weights = options.weights.code;
  std::vector<SolutionRecord> out;
  for (const auto& ep : epochs) {
    try {
      const WlsSolution sol = wls_spp(ep, w);
      SolutionRecord r;
      r.t = ep.t;
      r.pos_m = sol.state.pos_m;
      r.status = SolutionStatus::Wls;
      r.n_sats = static_cast<int>(ep.observations.size());
      out.push_back(r);
    } catch (const Error&) {
    }
  }
  return out;
}

std::vector<SolutionRecord> run_ekf(const std::vector<Epoch>& epochs, const PipelineOptions& options) {
  const EkfOptions eo = ekf_options(options);
  const auto pos = wls_positions(epochs, options);
  const auto vel = doppler_solutions(epochs, pos, options);
  std::vector<SolutionRecord> out;
  EkfState state;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    try {
      if (!state.initialized) {
        if (!pos[i]) continue;
        state = ekf_spp_initialize(epochs[i], vel[i], eo);
        SolutionRecord r;
        r.t = epochs[i].t;
        r.pos_m = state.pos();
        r.status = SolutionStatus::Ekf;
        r.n_sats = static_cast<int>(epochs[i].observations.size());
        out.push_back(r);
        continue;
      }
      auto [next, rec] = ekf_spp_step(state, epochs[i], vel[i], eo);
      state = std::move(next);
      out.push_back(rec);
    } catch (const Error&) {
    }
  }
  return out;
}

namespace {

std::vector<SolutionRecord> records_from(const Graph& g, const OptimizeResult& res,
                                         const std::vector<double>& times,
                                         const std::vector<int>& n_sats) {
  std::vector<SolutionRecord> out;
  for (std::size_t k = 0; k < res.node_indices.size(); ++k) {
    const StateNode& n = g.node(res.node_indices[k]);
    SolutionRecord r;
    r.t = times[static_cast<std::size_t>(n.epoch_index)];
    r.pos_m = res.states[k].pos_m;
    r.status = SolutionStatus::Fgo;
    r.n_sats = n_sats[static_cast<std::size_t>(n.epoch_index)];
    r.degraded = n.degraded;
    out.push_back(r);
  }
  return out;
}

OptimizeResult solve(Graph& g, const PipelineOptions& options) {
  const LmOptions lm = lm_options(options);
  return options.window > 0 ? optimize_windowed(g, options.window, lm) : optimize(g, lm);
}

}  // namespace

std::vector<SolutionRecord> run_fgo(const std::vector<Epoch>& epochs, const PipelineOptions& options) {
  if (epochs.empty()) return {};
  const auto pos = wls_positions(epochs, options);
  const auto vel = doppler_solutions(epochs, pos, options);
  Graph g = build_spp_graph(epochs, vel, graph_options(options));
  const OptimizeResult res = solve(g, options);
  std::vector<double> times;
  std::vector<int> n_sats;
  for (const auto& ep : epochs) {
    times.push_back(ep.t);
    n_sats.push_back(static_cast<int>(ep.observations.size()));
  }
  return records_from(g, res, times, n_sats);
}

PairedEpochs pair_double_differences(const std::vector<Epoch>& rover, const std::vector<Epoch>& base,
                                     const Vec3& base_pos, const PipelineOptions& options) {
  PairedEpochs out;
  const DdOptions dopt = dd_options(options);
  const double tol = 0.5 * dopt.interval_s;
  std::size_t j = 0;
  for (std::size_t i = 0; i < rover.size(); ++i) {
    while (j < base.size() && base[j].t < rover[i].t - tol) ++j;
    if (j >= base.size() || std::abs(base[j].t - rover[i].t) > tol) continue;
    try {
      out.dd.push_back(form_double_differences(rover[i], base[j], base_pos, dopt));
      out.rover_index.push_back(i);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientCommonSatellites) throw;
    }
  }
  return out;
}

std::vector<SolutionRecord> run_rtk_ekf(const std::vector<Epoch>& rover, const std::vector<Epoch>& base,
                                        const Vec3& base_pos, const PipelineOptions& options) {
  const EkfOptions eo = ekf_options(options);
  const PairedEpochs pairs = pair_double_differences(rover, base, base_pos, options);
  const auto pos = wls_positions(rover, options);
  const auto vel = doppler_solutions(rover, pos, options);
  std::vector<SolutionRecord> out;
  EkfState state;
  for (std::size_t k = 0; k < pairs.dd.size(); ++k) {
    const std::size_t i = pairs.rover_index[k];
    try {
      if (!state.initialized) {
        state = ekf_rtk_initialize(pos[i].value_or(base_pos), pairs.dd[k].t, vel[i], eo);
      }
      auto [next, rec] = ekf_rtk_step(state, pairs.dd[k], base_pos, vel[i], eo);
      state = std::move(next);
      out.push_back(rec);
    } catch (const Error&) {
    }
  }
  return out;
}

std::vector<SolutionRecord> run_rtk_fgo(const std::vector<Epoch>& rover, const std::vector<Epoch>& base,
                                        const Vec3& base_pos, const PipelineOptions& options) {
  const PairedEpochs pairs = pair_double_differences(rover, base, base_pos, options);
  if (pairs.dd.empty()) return {};
  const auto pos = wls_positions(rover, options);
  const auto vel_all = doppler_solutions(rover, pos, options);
  std::vector<std::optional<VelocitySolution>> vel;
  std::vector<Vec3> init;
  for (std::size_t i : pairs.rover_index) {
    vel.push_back(vel_all[i]);
    init.push_back(pos[i].value_or(base_pos));
  }
  Graph g = build_rtk_graph(pairs.dd, vel, base_pos, graph_options(options), init);
  const OptimizeResult res = solve(g, options);

  std::vector<SolutionRecord> out;
  for (std::size_t k = 0; k < res.node_indices.size(); ++k) {
    const StateNode& n = g.node(res.node_indices[k]);
    const ReceiverState& s = res.states[k];
    SolutionRecord r;
    r.t = n.t;
    r.pos_m = s.pos_m;
    r.float_pos_m = s.pos_m;
    r.status = SolutionStatus::RtkFloat;
    r.n_sats = static_cast<int>(pairs.dd[static_cast<std::size_t>(n.epoch_index)].obs.size());
    r.degraded = n.degraded;
    const auto na = static_cast<Eigen::Index>(n.ambiguities.size());
    if (na > 0 && na <= lambda::kMaxDimension) {
      Eigen::VectorXd a(na);
      for (Eigen::Index j = 0; j < na; ++j) {
        a(j) = s.dd_ambiguities_cycles.at(n.ambiguities[static_cast<std::size_t>(j)]);
      }
      const Eigen::MatrixXd& cov = res.covariances[k];
      const auto nc = static_cast<Eigen::Index>(n.clocks.size());
      Eigen::MatrixXd joint(3 + na, 3 + na);
      joint.topLeftCorner<3, 3>() = cov.topLeftCorner<3, 3>();
      joint.topRightCorner(3, na) = cov.block(0, 3 + nc, 3, na);
      joint.bottomLeftCorner(na, 3) = cov.block(3 + nc, 0, na, 3);
      joint.bottomRightCorner(na, na) = cov.block(3 + nc, 3 + nc, na, na);
      try {
        const auto fix = lambda::fix_solution(s.pos_m, a, joint, options.ratio_threshold);
        r.ratio = fix.ils.ratio;
        if (fix.fixed) {
          r.pos_m = fix.pos;
          r.status = SolutionStatus::RtkFixed;
        }
      } catch (const Error&) {
      }
    }
    out.push_back(r);
  }
  return out;
}

std::vector<SolutionRecord> run_method(Method method, const std::vector<Epoch>& rover,
                                       const std::vector<Epoch>& base, const std::optional<Vec3>& base_pos,
                                       const PipelineOptions& options) {
  switch (method) {
    case Method::Wls: return run_wls(rover, options);
    case Method::Ekf: return run_ekf(rover, options);
    case Method::Fgo: return run_fgo(rover, options);
    case Method::RtkEkf:
    case Method::RtkFgo:
      if (base.empty() || !base_pos) {
        throw Error(ErrorCode::InvalidConfig, "RTK methods need base epochs and a base position");
      }
      return method == Method::RtkEkf ? run_rtk_ekf(rover, base, *base_pos, options)
                                      : run_rtk_fgo(rover, base, *base_pos, options);
  }
  return {};
}

}  // namespace gnssfgo
