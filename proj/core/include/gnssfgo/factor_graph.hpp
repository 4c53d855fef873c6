#pragma once

#include "gnssfgo/doppler_velocity.hpp"
#include "gnssfgo/measurement_model.hpp"
#include "gnssfgo/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <optional>
#include <variant>
#include <vector>

namespace gnssfgo {

/// One receiver state in the graph. Its unknowns are the position, one clock
/// bias per entry of `clocks` and one DD ambiguity per entry of `ambiguities`.
/// Velocity is carried from the Doppler solution; no factor constrains it.
struct StateNode {
  int epoch_index = 0;
  double t = 0.0;
  ReceiverState state;
  bool fixed = false;
  std::vector<Constellation> clocks;
  std::vector<SatId> ambiguities;
  bool initialized = true;
  // Fewer pseudoranges than the node's own unknowns; position comes from
  // neighbouring states through velocity factors.
  bool degraded = false;

  int dim() const {
    return fixed ? 0 : 3 + static_cast<int>(clocks.size() + ambiguities.size());
  }
};

enum class FactorKind { Pseudorange, DopplerVelocity, DdPseudorange, DdCarrier, AmbiguityLink };

const char* to_string(FactorKind kind);

struct PseudorangeTerm {
  Vec3 sat_pos = Vec3::Zero();
  Constellation sys = Constellation::Gps;
};

struct VelocityTerm {
  double dt = 1.0;
};

/// A double difference against the node's rover position.
struct DdTerm {
  Vec3 sat_pos = Vec3::Zero();
  Vec3 master_pos = Vec3::Zero();
  SatId sat;
  double wavelength = constants::kLambdaL1;
};

/// A DD factor whitens a row of the epoch's DD covariance: its residual is
/// sqrt_info * (h(terms) - measurement), where `terms` covers the satellites
/// up to and including its own. Stacking the rows of one epoch gives the full
/// Cholesky whitening of the correlated block.
struct DdPayload {
  std::vector<DdTerm> terms;
  int base_node = -1;
};

struct AmbiguityLinkTerm {
  SatId sat;
};

struct Factor {
  FactorKind kind = FactorKind::Pseudorange;
  std::vector<int> node_refs;
  Eigen::VectorXd measurement;
  Eigen::MatrixXd sqrt_info;
  std::variant<PseudorangeTerm, VelocityTerm, DdPayload, AmbiguityLinkTerm> payload;

  int residual_dim() const { return static_cast<int>(sqrt_info.rows()); }
};

class Graph {
 public:
  int add_node(StateNode node);
  void add_factor(Factor factor);

  const std::vector<StateNode>& nodes() const { return nodes_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const StateNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }

  /// Replaces the state of a free node; fixed nodes reject the call.
  void set_node_state(int i, const ReceiverState& state);

  /// Indices of the free (non-fixed) nodes, in order.
  std::vector<int> free_nodes() const;

  /// Every node reachable from the first through factors (fixed anchors excluded).
  bool connected() const;

  std::size_t count(FactorKind kind) const;

  int window = 0;

 private:
  std::vector<StateNode> nodes_;
  std::vector<Factor> factors_;
};

// ---------------------------------------------------------------------------
// Graph construction

struct GraphOptions {
  WeightModel code{3.0};
  WeightModel carrier{0.01};
  double max_gap_s = 5.0;
  // Doppler LS covariance is scaled by this before becoming the velocity
  // factor's covariance.
  double velocity_cov_inflation = 2.0;
  int window = 0;
  // RTK: add between-epoch ambiguity equality factors.
  bool link_ambiguities = false;
  double ambiguity_link_sigma_cycles = 1e-3;
};

/// One pseudorange factor per satellite per epoch and one velocity factor per
/// consecutive pair (using the velocity of the earlier epoch). Nodes are
/// initialised from wls_spp, falling back to the previous node propagated
/// with its velocity.
Graph build_spp_graph(const std::vector<Epoch>& epochs,
                      const std::vector<std::optional<VelocitySolution>>& vel_meas,
                      const GraphOptions& options = {});

/// Per epoch: DD pseudorange and DD carrier factors with per-epoch ambiguity
/// unknowns; consecutive epochs linked by velocity factors; the base station
/// enters as a fixed node. `initial_positions` (optional, one per epoch)
/// seeds the rover nodes; otherwise they start at the base position.
Graph build_rtk_graph(const std::vector<DdEpoch>& dd_epochs,
                      const std::vector<std::optional<VelocitySolution>>& vel_meas,
                      const Vec3& base_pos, const GraphOptions& options = {},
                      const std::vector<Vec3>& initial_positions = {});

// ---------------------------------------------------------------------------
// Linearisation and solving

/// Whitened residual and per-node Jacobian blocks of one factor.
struct FactorLinearization {
  Eigen::VectorXd residual;
  std::vector<Eigen::MatrixXd> jacobians;  // aligned with node_refs; empty for fixed nodes
};

FactorLinearization linearize_factor(const Graph& graph, const Factor& factor);

/// Packs/unpacks a node's unknowns: [pos, clocks..., ambiguities...].
Eigen::VectorXd node_vector(const StateNode& node);
ReceiverState node_state_from_vector(const StateNode& node, const Eigen::VectorXd& v);

struct LinearSystem {
  Eigen::SparseMatrix<double> J;   // whitened Jacobian
  Eigen::VectorXd r;               // whitened residual
  std::vector<int> column_offset;  // per node; -1 for fixed nodes
  int num_columns = 0;
};

LinearSystem linearize(const Graph& graph);

/// Sum of squared whitened residuals (no robust kernel).
double objective(const Graph& graph);

enum class RobustKernel { None, Huber };

struct LmOptions {
  int max_iter = 50;
  double lambda0 = 1e-4;
  double step_tol = 1e-6;
  RobustKernel robust = RobustKernel::None;
  double huber_k = 1.345;
  // Throws if an accepted step ever increases the objective.
  bool assert_monotonic = true;
};

struct OptimizeResult {
  std::vector<ReceiverState> states;            // per free node
  std::vector<Eigen::MatrixXd> covariances;     // per free node, node-vector order
  std::vector<int> node_indices;                // graph index of each entry
  std::vector<double> cost_history;             // objective after each accepted step
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with lambda * diag(H) damping. Updates node states in
/// place and returns them with their marginal covariances.
OptimizeResult optimize(Graph& graph, const LmOptions& options = {});

/// Sliding-window re-optimisation: each epoch is solved with the previous
/// `window - 1` epochs, the oldest of which is held fixed. Returns one entry
/// per epoch, taken from the window that ends at it.
OptimizeResult optimize_windowed(Graph& graph, int window, const LmOptions& options = {});

/// Marginal covariance of a free node's unknowns from the information matrix
/// at the current linearisation point.
Eigen::MatrixXd marginal_covariance(const Graph& graph, int node_index);

}  // namespace gnssfgo
