#include "gnssfgo/factor_graph.hpp"

#include "gnssfgo/baselines.hpp"
#include "gnssfgo/error.hpp"
#include "gnssfgo/geometry.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace gnssfgo {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::Pseudorange: return "Pseudorange";
    case FactorKind::DopplerVelocity: return "DopplerVelocity";
    case FactorKind::DdPseudorange: return "DdPseudorange";
    case FactorKind::DdCarrier: return "DdCarrier";
    case FactorKind::AmbiguityLink: return "AmbiguityLink";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Graph

int Graph::add_node(StateNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

void Graph::add_factor(Factor factor) {
  const std::size_t expected =
      (factor.kind == FactorKind::DopplerVelocity || factor.kind == FactorKind::AmbiguityLink) ? 2
                                                                                               : 1;
  if (factor.node_refs.size() != expected) {
    throw Error(ErrorCode::InvalidConfig, std::string(to_string(factor.kind)) + " factor needs " +
                                              std::to_string(expected) + " node(s)");
  }
  for (int ref : factor.node_refs) {
    if (ref < 0 || ref >= static_cast<int>(nodes_.size())) {
      throw Error(ErrorCode::InvalidConfig, "factor references missing node " + std::to_string(ref));
    }
  }
  factors_.push_back(std::move(factor));
}

void Graph::set_node_state(int i, const ReceiverState& state) {
  auto& n = nodes_.at(static_cast<std::size_t>(i));
  if (n.fixed) throw Error(ErrorCode::FixedNode, "node " + std::to_string(i) + " is fixed");
  n.state = state;
  n.initialized = true;
}

std::vector<int> Graph::free_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].fixed) out.push_back(static_cast<int>(i));
  }
  return out;
}

bool Graph::connected() const {
  std::vector<int> parent(nodes_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    }
    return x;
  };
  for (const auto& f : factors_) {
    for (std::size_t k = 1; k < f.node_refs.size(); ++k) {
      if (node(f.node_refs[0]).fixed || node(f.node_refs[k]).fixed) continue;
      parent[static_cast<std::size_t>(find(f.node_refs[0]))] = find(f.node_refs[k]);
    }
  }
  const auto free = free_nodes();
  if (free.empty()) return true;
  const int root = find(free.front());
  return std::all_of(free.begin(), free.end(), [&](int i) { return find(i) == root; });
}

std::size_t Graph::count(FactorKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      factors_.begin(), factors_.end(), [&](const Factor& f) { return f.kind == kind; }));
}

// ---------------------------------------------------------------------------
// Node packing

namespace {

Index clock_column(const StateNode& n, Constellation sys) {
  auto it = std::find(n.clocks.begin(), n.clocks.end(), sys);
  if (it == n.clocks.end()) {
    throw Error(ErrorCode::UninitializedNode,
                std::string("node has no clock for constellation ") + constellation_tag(sys));
  }
  return 3 + (it - n.clocks.begin());
}

Index ambiguity_column(const StateNode& n, const SatId& sat) {
  auto it = std::find(n.ambiguities.begin(), n.ambiguities.end(), sat);
  if (it == n.ambiguities.end()) {
    throw Error(ErrorCode::UninitializedNode, "node has no ambiguity for " + sat.str());
  }
  return 3 + static_cast<Index>(n.clocks.size()) + (it - n.ambiguities.begin());
}

double ambiguity_value(const StateNode& n, const SatId& sat) {
  auto it = n.state.dd_ambiguities_cycles.find(sat);
  return it == n.state.dd_ambiguities_cycles.end() ? 0.0 : it->second;
}

Eigen::Matrix3d sqrt_information(const Eigen::Matrix3d& cov) {
  Eigen::LLT<Eigen::Matrix3d> llt(cov.inverse());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "velocity covariance not positive definite");
  }
  return llt.matrixU();
}

}  // namespace

VectorXd node_vector(const StateNode& n) {
  VectorXd v(3 + n.clocks.size() + n.ambiguities.size());
  v.head<3>() = n.state.pos_m;
  Index k = 3;
  for (auto sys : n.clocks) v(k++) = n.state.clock_for(sys);
  for (const auto& sat : n.ambiguities) v(k++) = ambiguity_value(n, sat);
  return v;
}

ReceiverState node_state_from_vector(const StateNode& n, const VectorXd& v) {
  ReceiverState s = n.state;
  s.pos_m = v.head<3>();
  Index k = 3;
  for (auto sys : n.clocks) s.clock_bias_m[sys] = v(k++);
  for (const auto& sat : n.ambiguities) s.dd_ambiguities_cycles[sat] = v(k++);
  return s;
}

// ---------------------------------------------------------------------------
// Factor evaluation

FactorLinearization linearize_factor(const Graph& graph, const Factor& f) {
  FactorLinearization out;
  const int rdim = f.residual_dim();
  out.jacobians.resize(f.node_refs.size());
  auto block_for = [&](std::size_t k) -> MatrixXd& {
    const StateNode& n = graph.node(f.node_refs[k]);
    out.jacobians[k] = MatrixXd::Zero(rdim, n.dim());
    return out.jacobians[k];
  };
  for (int ref : f.node_refs) {
    if (!graph.node(ref).initialized) {
      throw Error(ErrorCode::UninitializedNode, "node " + std::to_string(ref));
    }
  }

  switch (f.kind) {
    case FactorKind::Pseudorange: {
      const auto& term = std::get<PseudorangeTerm>(f.payload);
      const StateNode& n = graph.node(f.node_refs[0]);
      const Vec3& p = n.state.pos_m;
      const double h = (term.sat_pos - p).norm() + n.state.clock_for(term.sys);
      out.residual = f.sqrt_info * VectorXd::Constant(1, h - f.measurement(0));
      if (!n.fixed) {
        MatrixXd raw = MatrixXd::Zero(1, n.dim());
        raw.block<1, 3>(0, 0) = -los_unit_vector(term.sat_pos, p).transpose();
        raw(0, clock_column(n, term.sys)) = 1.0;
        block_for(0) = f.sqrt_info * raw;
      }
      break;
    }
    case FactorKind::DopplerVelocity: {
      const auto& term = std::get<VelocityTerm>(f.payload);
      const StateNode& a = graph.node(f.node_refs[0]);
      const StateNode& b = graph.node(f.node_refs[1]);
      const Vec3 h = (b.state.pos_m - a.state.pos_m) / term.dt;
      out.residual = f.sqrt_info * (h - f.measurement);
      if (!a.fixed) block_for(0).leftCols<3>() = -f.sqrt_info / term.dt;
      if (!b.fixed) block_for(1).leftCols<3>() = f.sqrt_info / term.dt;
      break;
    }
    case FactorKind::DdPseudorange:
    case FactorKind::DdCarrier: {
      const auto& dd = std::get<DdPayload>(f.payload);
      const StateNode& n = graph.node(f.node_refs[0]);
      const Vec3& base = graph.node(dd.base_node).state.pos_m;
      const Vec3& p = n.state.pos_m;
      const bool carrier = f.kind == FactorKind::DdCarrier;
      const auto k = static_cast<Index>(dd.terms.size());
      VectorXd err(k);
      MatrixXd raw = MatrixXd::Zero(k, n.dim());
      for (Index j = 0; j < k; ++j) {
        const DdTerm& t = dd.terms[static_cast<std::size_t>(j)];
        double h = dd_range(p, t.sat_pos, t.master_pos, base);
        if (carrier) h += t.wavelength * ambiguity_value(n, t.sat);
        err(j) = h - f.measurement(j);
        if (!n.fixed) {
          raw.block<1, 3>(j, 0) = dd_range_gradient(p, t.sat_pos, t.master_pos).transpose();
          if (carrier) raw(j, ambiguity_column(n, t.sat)) = t.wavelength;
        }
      }
      out.residual = f.sqrt_info * err;
      if (!n.fixed) block_for(0) = f.sqrt_info * raw;
      break;
    }
    case FactorKind::AmbiguityLink: {
      const auto& term = std::get<AmbiguityLinkTerm>(f.payload);
      const StateNode& a = graph.node(f.node_refs[0]);
      const StateNode& b = graph.node(f.node_refs[1]);
      const double h = ambiguity_value(a, term.sat) - ambiguity_value(b, term.sat);
      out.residual = f.sqrt_info * VectorXd::Constant(1, h - f.measurement(0));
      if (!a.fixed) block_for(0)(0, ambiguity_column(a, term.sat)) = f.sqrt_info(0, 0);
      if (!b.fixed) block_for(1)(0, ambiguity_column(b, term.sat)) = -f.sqrt_info(0, 0);
      break;
    }
  }
  return out;
}

namespace {

bool all_fixed(const Graph& g, const Factor& f) {
  return std::all_of(f.node_refs.begin(), f.node_refs.end(),
                     [&](int i) { return g.node(i).fixed; });
}

double huber_rho(double s2, double k) {
  const double s = std::sqrt(s2);
  return s <= k ? s2 : 2.0 * k * s - k * k;
}

double robust_objective(const Graph& g, const LmOptions& opt) {
  double cost = 0.0;
  for (const auto& f : g.factors()) {
    if (all_fixed(g, f)) continue;
    const double s2 = linearize_factor(g, f).residual.squaredNorm();
    cost += opt.robust == RobustKernel::Huber ? huber_rho(s2, opt.huber_k) : s2;
  }
  return cost;
}

LinearSystem linearize_impl(const Graph& g, const LmOptions* robust) {
  LinearSystem sys;
  sys.column_offset.assign(g.nodes().size(), -1);
  int cols = 0;
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    if (g.nodes()[i].fixed) continue;
    sys.column_offset[i] = cols;
    cols += g.nodes()[i].dim();
  }
  sys.num_columns = cols;

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> residuals;
  int row = 0;
  for (const auto& f : g.factors()) {
    if (all_fixed(g, f)) continue;
    FactorLinearization lin = linearize_factor(g, f);
    double scale = 1.0;
    if (robust && robust->robust == RobustKernel::Huber) {
      const double s = lin.residual.norm();
      if (s > robust->huber_k) scale = std::sqrt(robust->huber_k / s);
    }
    for (std::size_t k = 0; k < f.node_refs.size(); ++k) {
      const int off = sys.column_offset[static_cast<std::size_t>(f.node_refs[k])];
      if (off < 0) continue;
      const MatrixXd& J = lin.jacobians[k];
      for (Index r = 0; r < J.rows(); ++r) {
        for (Index c = 0; c < J.cols(); ++c) {
          if (J(r, c) != 0.0) triplets.emplace_back(row + static_cast<int>(r), off + static_cast<int>(c), scale * J(r, c));
        }
      }
    }
    for (Index r = 0; r < lin.residual.size(); ++r) residuals.push_back(scale * lin.residual(r));
    row += static_cast<int>(lin.residual.size());
  }
  sys.J.resize(row, cols);
  sys.J.setFromTriplets(triplets.begin(), triplets.end());
  sys.r = Eigen::Map<VectorXd>(residuals.data(), static_cast<Index>(residuals.size()));
  return sys;
}

VectorXd stack_state(const Graph& g, const LinearSystem& sys) {
  VectorXd x(sys.num_columns);
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    const int off = sys.column_offset[i];
    if (off < 0) continue;
    x.segment(off, g.nodes()[i].dim()) = node_vector(g.nodes()[i]);
  }
  return x;
}

void scatter_state(Graph& g, const LinearSystem& sys, const VectorXd& x) {
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    const int off = sys.column_offset[i];
    if (off < 0) continue;
    const StateNode& n = g.nodes()[i];
    g.set_node_state(static_cast<int>(i), node_state_from_vector(n, x.segment(off, n.dim())));
  }
}

using SparseLdlt = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

MatrixXd covariance_block(const SparseLdlt& solver, int offset, int dim, int n) {
  MatrixXd E = MatrixXd::Zero(n, dim);
  for (int k = 0; k < dim; ++k) E(offset + k, k) = 1.0;
  MatrixXd X = solver.solve(E);
  MatrixXd block = X.middleRows(offset, dim);
  return 0.5 * (block + block.transpose());
}

}  // namespace

LinearSystem linearize(const Graph& graph) { return linearize_impl(graph, nullptr); }

double objective(const Graph& graph) {
  double cost = 0.0;
  for (const auto& f : graph.factors()) {
    if (all_fixed(graph, f)) continue;
    cost += linearize_factor(graph, f).residual.squaredNorm();
  }
  return cost;
}

OptimizeResult optimize(Graph& graph, const LmOptions& opt) {
  OptimizeResult result;
  if (graph.free_nodes().empty()) {
    result.converged = true;
    return result;
  }
  double cost = robust_objective(graph, opt);
  result.initial_cost = cost;
  double lambda = opt.lambda0;

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    const LinearSystem sys = linearize_impl(graph, &opt);
    const Eigen::SparseMatrix<double> Jt = sys.J.transpose();
    const Eigen::SparseMatrix<double> H = Jt * sys.J;
    const VectorXd g = Jt * sys.r;
    const VectorXd diag = H.diagonal();
    const VectorXd x0 = stack_state(graph, sys);
    ++result.iterations;

    bool accepted = false;
    bool small_step = false;
    while (lambda <= 1e12) {
      Eigen::SparseMatrix<double> A = H;
      for (Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += lambda * diag(i);
      SparseLdlt solver(A);
      if (solver.info() != Eigen::Success) {
        lambda = std::max(lambda * 10.0, 1e-9);
        continue;
      }
      const VectorXd delta = solver.solve(-g);
      if (!delta.allFinite()) {
        lambda = std::max(lambda * 10.0, 1e-9);
        continue;
      }
      scatter_state(graph, sys, x0 + delta);
      const double new_cost = robust_objective(graph, opt);
      small_step = delta.norm() < opt.step_tol;
      if (new_cost <= cost) {
        if (opt.assert_monotonic) {
          // Re-evaluate from the written-back state, not the trial value.
          const double check = robust_objective(graph, opt);
          const double prev = result.cost_history.empty() ? result.initial_cost : result.cost_history.back();
          if (!(check <= prev)) {
            throw Error(ErrorCode::NoConvergence, "accepted step increased the objective");
          }
        }
        cost = new_cost;
        result.cost_history.push_back(cost);
        lambda /= 10.0;
        accepted = true;
        break;
      }
      scatter_state(graph, sys, x0);
      if (small_step) break;
      lambda = std::max(lambda * 10.0, 1e-9);
    }
    if (small_step || !accepted) {
      result.converged = small_step || !accepted;
      break;
    }
  }
  result.final_cost = cost;

  // Marginal covariances at the solution.
  const LinearSystem sys = linearize(graph);
  const Eigen::SparseMatrix<double> H = sys.J.transpose() * sys.J;
  SparseLdlt solver(H);
  const bool ok = solver.info() == Eigen::Success && (solver.vectorD().array() > 0.0).all();
  if (!ok) throw Error(ErrorCode::SingularSystem, "information matrix is singular");
  for (int i : graph.free_nodes()) {
    const StateNode& n = graph.node(i);
    result.node_indices.push_back(i);
    result.states.push_back(n.state);
    result.covariances.push_back(
        covariance_block(solver, sys.column_offset[static_cast<std::size_t>(i)], n.dim(), sys.num_columns));
  }
  return result;
}

MatrixXd marginal_covariance(const Graph& graph, int node_index) {
  const StateNode& n = graph.node(node_index);
  if (n.fixed) {
    throw Error(ErrorCode::FixedNode, "fixed node " + std::to_string(node_index) + " has no covariance");
  }
  const LinearSystem sys = linearize(graph);
  const Eigen::SparseMatrix<double> H = sys.J.transpose() * sys.J;
  SparseLdlt solver(H);
  if (solver.info() != Eigen::Success || !(solver.vectorD().array() > 0.0).all()) {
    throw Error(ErrorCode::SingularSystem, "information matrix is singular");
  }
  return covariance_block(solver, sys.column_offset[static_cast<std::size_t>(node_index)], n.dim(),
                          sys.num_columns);
}

OptimizeResult optimize_windowed(Graph& graph, int window, const LmOptions& opt) {
  if (window <= 0) return optimize(graph, opt);

  // Epoch nodes are the free nodes; fixed nodes (base station) are shared.
  const std::vector<int> epochs = graph.free_nodes();
  std::vector<int> anchors;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    if (graph.nodes()[i].fixed) anchors.push_back(static_cast<int>(i));
  }

  OptimizeResult result;
  std::vector<ReceiverState> latest;
  for (int i : epochs) latest.push_back(graph.node(i).state);
  std::vector<ReceiverState> final_states(epochs.size());

  for (std::size_t k = 0; k < epochs.size(); ++k) {
    const std::size_t start = k + 1 >= static_cast<std::size_t>(window) ? k + 1 - window : 0;
    Graph sub;
    std::map<int, int> remap;
    for (std::size_t j = start; j <= k; ++j) {
      StateNode n = graph.node(epochs[j]);
      n.state = latest[j];
      n.fixed = start > 0 && j == start && j < k;
      remap[epochs[j]] = sub.add_node(std::move(n));
    }
    for (int a : anchors) remap[a] = sub.add_node(graph.node(a));
    for (const auto& f : graph.factors()) {
      bool inside = std::all_of(f.node_refs.begin(), f.node_refs.end(),
                                [&](int r) { return remap.count(r) > 0; });
      if (!inside) continue;
      Factor g = f;
      for (int& r : g.node_refs) r = remap[r];
      if (auto* dd = std::get_if<DdPayload>(&g.payload)) dd->base_node = remap[dd->base_node];
      sub.add_factor(std::move(g));
    }
    OptimizeResult part = optimize(sub, opt);
    result.iterations += part.iterations;
    result.cost_history.insert(result.cost_history.end(), part.cost_history.begin(),
                               part.cost_history.end());
    for (std::size_t j = start; j <= k; ++j) {
      const StateNode& n = sub.node(remap[epochs[j]]);
      if (!n.fixed) latest[j] = n.state;
    }
    final_states[k] = latest[k];
    result.node_indices.push_back(epochs[k]);
    result.states.push_back(latest[k]);
    result.covariances.push_back(part.covariances.back());
    result.converged = (k == 0 ? true : result.converged) && part.converged;
  }
  for (std::size_t k = 0; k < epochs.size(); ++k) graph.set_node_state(epochs[k], final_states[k]);
  return result;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

Factor velocity_factor(int a, int b, double dt, const VelocitySolution& vel, double inflation) {
  Factor f;
  f.kind = FactorKind::DopplerVelocity;
  f.node_refs = {a, b};
  f.measurement = vel.vel_mps;
  f.sqrt_info = sqrt_information(inflation * vel.velocity_covariance());
  f.payload = VelocityTerm{dt};
  return f;
}

void check_alignment(std::size_t n_epochs, std::size_t n_vel) {
  if (n_vel != n_epochs) {
    throw Error(ErrorCode::InvalidConfig, "velocity list has " + std::to_string(n_vel) +
                                              " entries for " + std::to_string(n_epochs) + " epochs");
  }
}

double check_gap(double t0, double t1, const GraphOptions& opt) {
  const double dt = t1 - t0;
  if (!(dt > 0.0)) throw Error(ErrorCode::TimeReversal, "epochs not strictly increasing");
  if (dt > opt.max_gap_s) {
    throw Error(ErrorCode::GapTooLarge, "gap of " + std::to_string(dt) + " s at t=" + std::to_string(t0));
  }
  return dt;
}

// Rows of L^-1 for cov = L L^T.
MatrixXd whitening(const MatrixXd& cov) {
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "DD covariance not positive definite");
  }
  const MatrixXd L = llt.matrixL();
  return L.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(cov.rows(), cov.cols()));
}

}  // namespace

Graph build_spp_graph(const std::vector<Epoch>& epochs,
                      const std::vector<std::optional<VelocitySolution>>& vel_meas,
                      const GraphOptions& opt) {
  if (epochs.empty()) throw Error(ErrorCode::EmptyInput, "no epochs");
  check_alignment(epochs.size(), vel_meas.size());
  for (std::size_t i = 1; i < epochs.size(); ++i) check_gap(epochs[i - 1].t, epochs[i].t, opt);

  Graph g;
  g.window = opt.window;
  WlsOptions wopt;
  wopt.weights = opt.code;

  std::vector<bool> have_wls(epochs.size(), false);
  std::vector<StateNode> nodes(epochs.size());
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    StateNode& n = nodes[i];
    n.epoch_index = static_cast<int>(i);
    n.t = epochs[i].t;
    n.clocks = constellations_in(epochs[i]);
    n.degraded = epochs[i].observations.size() < 3 + n.clocks.size();
    if (vel_meas[i]) {
      n.state.vel_mps = vel_meas[i]->vel_mps;
      n.state.clock_drift_mps = vel_meas[i]->clock_drift_mps;
    }
    if (n.degraded) continue;
    try {
      const WlsSolution wls = wls_spp(epochs[i], wopt);
      n.state.pos_m = wls.state.pos_m;
      n.state.clock_bias_m = wls.state.clock_bias_m;
      have_wls[i] = true;
    } catch (const Error&) {
      n.degraded = true;
    }
  }
  const auto first = std::find(have_wls.begin(), have_wls.end(), true);
  if (first == have_wls.end()) {
    throw Error(ErrorCode::InsufficientSatellites, "no epoch supports a standalone solution");
  }
  const auto i0 = static_cast<std::size_t>(first - have_wls.begin());
  for (std::size_t i = i0; i-- > 0;) nodes[i].state.pos_m = nodes[i + 1].state.pos_m;
  for (std::size_t i = i0 + 1; i < nodes.size(); ++i) {
    if (have_wls[i]) continue;
    const double dt = nodes[i].t - nodes[i - 1].t;
    nodes[i].state.pos_m = nodes[i - 1].state.pos_m + nodes[i - 1].state.vel_mps * dt;
  }
  // Clock seeds for nodes without a WLS fix: median of code minus range.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (have_wls[i]) continue;
    for (auto sys : nodes[i].clocks) {
      std::vector<double> v;
      for (const auto& o : epochs[i].observations) {
        if (o.sat.sys == sys) {
          v.push_back(o.corrected_pseudorange() - (o.sat_pos_m - nodes[i].state.pos_m).norm());
        }
      }
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
      nodes[i].state.clock_bias_m[sys] = v[v.size() / 2];
    }
  }

  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const int id = g.add_node(nodes[i]);
    const Vec3 p = nodes[i].state.pos_m;
    for (const auto& o : epochs[i].observations) {
      Factor f;
      f.kind = FactorKind::Pseudorange;
      f.node_refs = {id};
      f.measurement = VectorXd::Constant(1, o.corrected_pseudorange());
      const double var = weighting_variance(opt.code, elevation_angle(o.sat_pos_m, p), o.snr_dbhz);
      f.sqrt_info = MatrixXd::Constant(1, 1, 1.0 / std::sqrt(var));
      f.payload = PseudorangeTerm{o.sat_pos_m, o.sat.sys};
      g.add_factor(std::move(f));
    }
  }
  for (std::size_t i = 0; i + 1 < epochs.size(); ++i) {
    if (!vel_meas[i]) continue;
    const double dt = epochs[i + 1].t - epochs[i].t;
    g.add_factor(velocity_factor(static_cast<int>(i), static_cast<int>(i + 1), dt, *vel_meas[i],
                                 opt.velocity_cov_inflation));
  }
  return g;
}

Graph build_rtk_graph(const std::vector<DdEpoch>& dd_epochs,
                      const std::vector<std::optional<VelocitySolution>>& vel_meas,
                      const Vec3& base_pos, const GraphOptions& opt,
                      const std::vector<Vec3>& initial_positions) {
  if (dd_epochs.empty()) throw Error(ErrorCode::EmptyInput, "no DD epochs");
  check_alignment(dd_epochs.size(), vel_meas.size());
  if (!initial_positions.empty() && initial_positions.size() != dd_epochs.size()) {
    throw Error(ErrorCode::InvalidConfig, "initial positions not aligned with epochs");
  }
  for (std::size_t i = 1; i < dd_epochs.size(); ++i) {
    check_gap(dd_epochs[i - 1].t, dd_epochs[i].t, opt);
  }

  Graph g;
  g.window = opt.window;
  for (std::size_t i = 0; i < dd_epochs.size(); ++i) {
    const DdEpoch& dd = dd_epochs[i];
    if (dd.obs.empty()) {
      throw Error(ErrorCode::InsufficientCommonSatellites, "epoch without double differences");
    }
    StateNode n;
    n.epoch_index = static_cast<int>(i);
    n.t = dd.t;
    n.state.pos_m = initial_positions.empty() ? base_pos : initial_positions[i];
    if (vel_meas[i]) {
      n.state.vel_mps = vel_meas[i]->vel_mps;
      n.state.clock_drift_mps = vel_meas[i]->clock_drift_mps;
    }
    for (int c : dd.carrier_indices()) {
      const auto& o = dd.obs[static_cast<std::size_t>(c)];
      n.ambiguities.push_back(o.sat_id);
      n.state.dd_ambiguities_cycles[o.sat_id] = (*o.dd_carrier_m - o.dd_pseudorange_m) / o.wavelength_m;
    }
    n.degraded = dd.obs.size() < 3;
    g.add_node(std::move(n));
  }
  StateNode base;
  base.epoch_index = -1;
  base.fixed = true;
  base.state.pos_m = base_pos;
  const int base_id = g.add_node(std::move(base));

  for (std::size_t i = 0; i < dd_epochs.size(); ++i) {
    const DdEpoch& dd = dd_epochs[i];
    const int id = static_cast<int>(i);
    auto add_rows = [&](FactorKind kind, const std::vector<int>& idx, const MatrixXd& cov) {
      const MatrixXd W = whitening(cov);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        Factor f;
        f.kind = kind;
        f.node_refs = {id};
        DdPayload payload;
        payload.base_node = base_id;
        std::vector<double> z, w;
        for (std::size_t j = 0; j <= r; ++j) {
          const double wij = W(static_cast<Index>(r), static_cast<Index>(j));
          if (wij == 0.0) continue;
          const auto& o = dd.obs[static_cast<std::size_t>(idx[j])];
          payload.terms.push_back({o.sat_pos_m, o.master_pos_m, o.sat_id, o.wavelength_m});
          z.push_back(kind == FactorKind::DdCarrier ? *o.dd_carrier_m : o.dd_pseudorange_m);
          w.push_back(wij);
        }
        f.measurement = Eigen::Map<VectorXd>(z.data(), static_cast<Index>(z.size()));
        f.sqrt_info = Eigen::Map<Eigen::RowVectorXd>(w.data(), static_cast<Index>(w.size()));
        f.payload = std::move(payload);
        g.add_factor(std::move(f));
      }
    };
    std::vector<int> all(dd.obs.size());
    std::iota(all.begin(), all.end(), 0);
    add_rows(FactorKind::DdPseudorange, all, dd.pseudorange_cov);
    const std::vector<int> cidx = dd.carrier_indices();
    if (!cidx.empty()) {
      MatrixXd cov(cidx.size(), cidx.size());
      for (std::size_t a = 0; a < cidx.size(); ++a) {
        for (std::size_t b = 0; b < cidx.size(); ++b) {
          cov(static_cast<Index>(a), static_cast<Index>(b)) = dd.carrier_cov(cidx[a], cidx[b]);
        }
      }
      add_rows(FactorKind::DdCarrier, cidx, cov);
    }
  }

  for (std::size_t i = 0; i + 1 < dd_epochs.size(); ++i) {
    if (vel_meas[i]) {
      const double dt = dd_epochs[i + 1].t - dd_epochs[i].t;
      g.add_factor(velocity_factor(static_cast<int>(i), static_cast<int>(i + 1), dt, *vel_meas[i],
                                   opt.velocity_cov_inflation));
    }
    if (!opt.link_ambiguities) continue;
    for (const auto& a : dd_epochs[i].obs) {
      if (!a.dd_carrier_m) continue;
      for (const auto& b : dd_epochs[i + 1].obs) {
        if (!b.dd_carrier_m || b.sat_id != a.sat_id || b.master_id != a.master_id) continue;
        Factor f;
        f.kind = FactorKind::AmbiguityLink;
        f.node_refs = {static_cast<int>(i), static_cast<int>(i + 1)};
        f.measurement = VectorXd::Zero(1);
        f.sqrt_info = MatrixXd::Constant(1, 1, 1.0 / opt.ambiguity_link_sigma_cycles);
        f.payload = AmbiguityLinkTerm{a.sat_id};
        g.add_factor(std::move(f));
      }
    }
  }
  return g;
}

}  // namespace gnssfgo
