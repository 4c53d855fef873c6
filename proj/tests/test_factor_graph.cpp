#include "gnssfgo/baselines.hpp"
#include "gnssfgo/error.hpp"
#include "gnssfgo/factor_graph.hpp"
#include "gnssfgo/pipeline.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gnssfgo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct SppInput {
  Scenario sc;
  std::vector<std::optional<VelocitySolution>> vel;
};

SppInput spp_input(ScenarioConfig c) {
  SppInput in{generate(c), {}};
  const PipelineOptions o;
  in.vel = doppler_solutions(in.sc.rover, wls_positions(in.sc.rover, o), o);
  return in;
}

ScenarioConfig short_config(Severity s, std::uint64_t seed, double duration, bool noise = true) {
  ScenarioConfig c = urban_canyon_preset(s, seed);
  if (!noise) c = without_noise(c);
  c.duration_s = duration;
  return c;
}

struct RtkInput {
  Scenario sc;
  std::vector<DdEpoch> dd;
  std::vector<std::optional<VelocitySolution>> vel;
  std::vector<Vec3> init;
  Vec3 base;
};

RtkInput rtk_input(std::uint64_t seed, int epochs, bool noise) {
  ScenarioConfig c = static_rtk_preset(seed);
  if (!noise) c = without_noise(c);
  c.duration_s = epochs;
  RtkInput in;
  in.sc = generate(c);
  in.base = *in.sc.truth.base_pos_m;
  const PipelineOptions o;
  const auto pos = wls_positions(in.sc.rover, o);
  const auto vel = doppler_solutions(in.sc.rover, pos, o);
  for (std::size_t k = 0; k < in.sc.rover.size(); ++k) {
    in.dd.push_back(form_double_differences(in.sc.rover[k], in.sc.base[k], in.base, dd_options(o)));
    in.vel.push_back(vel[k]);
    in.init.push_back(*pos[k]);
  }
  return in;
}

double true_dd_ambiguity(const GroundTruth& t, const SatId& s, const SatId& w) {
  return static_cast<double>((t.rover_ambiguities.at(s) - t.base_ambiguities.at(s)) -
                             (t.rover_ambiguities.at(w) - t.base_ambiguities.at(w)));
}

// Dense information matrix of the current linearisation.
MatrixXd dense_information(const Graph& g) {
  const LinearSystem sys = linearize(g);
  const MatrixXd J(sys.J);
  return J.transpose() * J;
}

MatrixXd rel_block(const MatrixXd& full, int offset, int dim) { return full.block(offset, offset, dim, dim); }

}  // namespace

TEST(SppGraph, FactorCounts) {
  const SppInput in = spp_input(short_config(Severity::Mid, 1, 10));
  const Graph g = build_spp_graph(in.sc.rover, in.vel);
  std::size_t m = 0;
  for (const auto& e : in.sc.rover) m += e.observations.size();
  EXPECT_EQ(g.nodes().size(), in.sc.rover.size());
  EXPECT_EQ(g.count(FactorKind::Pseudorange), m);
  EXPECT_EQ(g.count(FactorKind::DopplerVelocity), in.sc.rover.size() - 1);
  EXPECT_TRUE(g.connected());
}

TEST(SppGraph, SingleEpochMatchesWls) {
  const SppInput in = spp_input(short_config(Severity::High, 2, 8));
  for (std::size_t k = 0; k < in.sc.rover.size(); ++k) {
    Graph g = build_spp_graph({in.sc.rover[k]}, {in.vel[k]});
    EXPECT_EQ(g.count(FactorKind::DopplerVelocity), 0u);
    const OptimizeResult r = optimize(g);
    const WlsSolution w = wls_spp(in.sc.rover[k]);
    EXPECT_LT((r.states[0].pos_m - w.state.pos_m).norm(), 1e-6);
    // Same information matrix, same ordering [pos, clocks].
    const MatrixXd& c = r.covariances[0];
    EXPECT_LT((c - w.covariance).norm(), 1e-9 * w.covariance.norm());
    const LinearSystem sys = linearize(g);
    EXPECT_EQ(sys.num_columns, 3 + static_cast<int>(w.clocks.size()));
  }
}

TEST(SppGraph, GapHandling) {
  const SppInput in = spp_input(short_config(Severity::Low, 3, 12));
  std::vector<Epoch> e = in.sc.rover;
  std::vector<std::optional<VelocitySolution>> v = in.vel;
  e.erase(e.begin() + 3, e.begin() + 5);  // 3 s gap between t3 and t6 after removing two epochs
  v.erase(v.begin() + 3, v.begin() + 5);
  const Graph g = build_spp_graph(e, v);
  const auto& f = g.factors();
  bool found = false;
  for (const auto& fac : f) {
    if (fac.kind != FactorKind::DopplerVelocity || fac.node_refs[0] != 2) continue;
    EXPECT_DOUBLE_EQ(std::get<VelocityTerm>(fac.payload).dt, 3.0);
    found = true;
  }
  EXPECT_TRUE(found);

  std::vector<Epoch> far = in.sc.rover;
  far.erase(far.begin() + 2, far.begin() + 8);
  std::vector<std::optional<VelocitySolution>> fv(far.size());
  try {
    build_spp_graph(far, fv);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::GapTooLarge);
  }
  try {
    build_spp_graph({}, {});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::EmptyInput);
  }
}

TEST(SppGraph, ZeroNoiseStaticRecoversTruth) {
  ScenarioConfig c = without_noise(static_rtk_preset(4));
  c.duration_s = 20;
  const SppInput in = spp_input(c);
  Graph g = build_spp_graph(in.sc.rover, in.vel);
  const OptimizeResult r = optimize(g);
  ASSERT_EQ(r.states.size(), in.sc.rover.size());
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    EXPECT_LT((r.states[k].pos_m - in.sc.truth.epochs[k].state.pos_m).norm(), 1e-3) << "epoch " << k;
  }
}

// The velocity factor compares a forward difference with v(t), which is only
// exact for straight constant-speed motion. Feeding it the true forward
// difference on the curved loop must close exactly.
TEST(SppGraph, ZeroNoiseCurvedPathWithForwardDifferenceVelocity) {
  SppInput in = spp_input(short_config(Severity::High, 4, 20, false));
  const auto& tr = in.sc.truth.epochs;
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
    ASSERT_TRUE(in.vel[k]);
    in.vel[k]->vel_mps = (tr[k + 1].state.pos_m - tr[k].state.pos_m) / (tr[k + 1].t - tr[k].t);
  }
  Graph g = build_spp_graph(in.sc.rover, in.vel);
  const OptimizeResult r = optimize(g);
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    EXPECT_LT((r.states[k].pos_m - tr[k].state.pos_m).norm(), 1e-3) << "epoch " << k;
  }
}

TEST(SppGraph, VelocitySqrtInfoMatchesInflatedCovariance) {
  const SppInput in = spp_input(short_config(Severity::Mid, 5, 4));
  GraphOptions opt;
  opt.velocity_cov_inflation = 2.0;
  const Graph g = build_spp_graph(in.sc.rover, in.vel, opt);
  for (const auto& f : g.factors()) {
    if (f.kind != FactorKind::DopplerVelocity) continue;
    const MatrixXd cov = 2.0 * in.vel[static_cast<std::size_t>(f.node_refs[0])]->velocity_covariance();
    const MatrixXd info = f.sqrt_info.transpose() * f.sqrt_info;
    EXPECT_LT((info * cov - MatrixXd::Identity(3, 3)).norm(), 1e-9);
  }
}

TEST(RtkGraph, StructureAndWhitening) {
  const RtkInput in = rtk_input(6, 4, true);
  const Graph g = build_rtk_graph(in.dd, in.vel, in.base, {}, in.init);
  std::size_t ndd = 0;
  for (const auto& d : in.dd) ndd += d.obs.size();
  EXPECT_EQ(g.count(FactorKind::DdPseudorange), ndd);
  EXPECT_EQ(g.count(FactorKind::DdCarrier), ndd);
  EXPECT_EQ(g.count(FactorKind::AmbiguityLink), 0u);
  EXPECT_TRUE(g.nodes().back().fixed);
  for (std::size_t k = 0; k < in.dd.size(); ++k) EXPECT_EQ(g.node(static_cast<int>(k)).ambiguities.size(), in.dd[k].obs.size());
  const LinearSystem sys = linearize(g);
  EXPECT_EQ(sys.column_offset.back(), -1);

  // Rows of epoch 0 stack into W with W^T W = inverse DD covariance.
  const DdEpoch& d0 = in.dd[0];
  const auto n = static_cast<Eigen::Index>(d0.obs.size());
  for (FactorKind kind : {FactorKind::DdPseudorange, FactorKind::DdCarrier}) {
    MatrixXd W = MatrixXd::Zero(n, n);
    Eigen::Index row = 0;
    for (const auto& f : g.factors()) {
      if (f.kind != kind || f.node_refs[0] != 0) continue;
      const auto& p = std::get<DdPayload>(f.payload);
      for (std::size_t j = 0; j < p.terms.size(); ++j) {
        Eigen::Index col = 0;
        while (d0.obs[static_cast<std::size_t>(col)].sat_id != p.terms[j].sat) ++col;
        W(row, col) = f.sqrt_info(0, static_cast<Eigen::Index>(j));
      }
      ++row;
    }
    ASSERT_EQ(row, n);
    const MatrixXd& cov = kind == FactorKind::DdPseudorange ? d0.pseudorange_cov : d0.carrier_cov;
    EXPECT_LT((W.transpose() * W * cov - MatrixXd::Identity(n, n)).norm(), 1e-9 * n);
  }

  GraphOptions linked;
  linked.link_ambiguities = true;
  const Graph gl = build_rtk_graph(in.dd, in.vel, in.base, linked, in.init);
  EXPECT_GT(gl.count(FactorKind::AmbiguityLink), 0u);
}

TEST(RtkGraph, ZeroNoiseFloatSolution) {
  const RtkInput in = rtk_input(7, 10, false);
  Graph g = build_rtk_graph(in.dd, in.vel, in.base, {}, in.init);
  const OptimizeResult r = optimize(g);
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    EXPECT_LT((r.states[k].pos_m - in.sc.truth.epochs[k].state.pos_m).norm(), 1e-3);
    for (const auto& o : in.dd[k].obs) {
      EXPECT_NEAR(r.states[k].dd_ambiguities_cycles.at(o.sat_id),
                  true_dd_ambiguity(in.sc.truth, o.sat_id, o.master_id), 0.01);
    }
  }
}

TEST(RtkGraph, BaseNodeIsImmutable) {
  const RtkInput in = rtk_input(8, 2, false);
  Graph g = build_rtk_graph(in.dd, in.vel, in.base, {}, in.init);
  const int base = static_cast<int>(g.nodes().size()) - 1;
  ReceiverState moved = g.node(base).state;
  moved.pos_m.x() += 1.0;
  try {
    g.set_node_state(base, moved);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FixedNode);
  }
  try {
    marginal_covariance(g, base);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FixedNode);
  }
}

TEST(Graph, RejectsBadFactorsAndUninitialisedNodes) {
  Graph g;
  StateNode n;
  n.clocks = {Constellation::Gps};
  g.add_node(n);
  Factor f;
  f.kind = FactorKind::DopplerVelocity;
  f.node_refs = {0};
  EXPECT_THROW(g.add_factor(f), Error);
  f.kind = FactorKind::Pseudorange;
  f.node_refs = {3};
  EXPECT_THROW(g.add_factor(f), Error);

  Graph h;
  StateNode u;
  u.clocks = {Constellation::Gps};
  u.initialized = false;
  h.add_node(u);
  Factor pr;
  pr.kind = FactorKind::Pseudorange;
  pr.node_refs = {0};
  pr.measurement = VectorXd::Constant(1, 2e7);
  pr.sqrt_info = MatrixXd::Identity(1, 1);
  pr.payload = PseudorangeTerm{Vec3(2.6e7, 0, 0), Constellation::Gps};
  h.add_factor(pr);
  try {
    linearize(h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UninitializedNode);
  }
}

TEST(Jacobians, AllFactorKindsMatchFiniteDifferences) {
  const SppInput spp = spp_input(short_config(Severity::High, 9, 3));
  const RtkInput rtk = rtk_input(9, 3, true);
  GraphOptions linked;
  linked.link_ambiguities = true;
  std::vector<Graph> graphs{build_spp_graph(spp.sc.rover, spp.vel),
                            build_rtk_graph(rtk.dd, rtk.vel, rtk.base, linked, rtk.init)};
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::map<FactorKind, int> checked;
  for (int point = 0; point < 100; ++point) {
    for (Graph& g : graphs) {
      for (int i : g.free_nodes()) {
        VectorXd v = node_vector(g.node(i));
        v.head<3>() += 200.0 * Vec3(u(rng), u(rng), u(rng));
        for (Eigen::Index j = 3; j < v.size(); ++j) v(j) += 50.0 * u(rng);
        g.set_node_state(i, node_state_from_vector(g.node(i), v));
      }
      for (const Factor& f : g.factors()) {
        const FactorLinearization lin = linearize_factor(g, f);
        for (std::size_t k = 0; k < f.node_refs.size(); ++k) {
          const int ref = f.node_refs[k];
          if (g.node(ref).fixed) continue;
          const VectorXd x0 = node_vector(g.node(ref));
          MatrixXd fd(lin.residual.size(), x0.size());
          for (Eigen::Index j = 0; j < x0.size(); ++j) {
            const double h = 1.0;
            VectorXd xp = x0, xm = x0;
            xp(j) += h;
            xm(j) -= h;
            Graph& gm = g;
            gm.set_node_state(ref, node_state_from_vector(g.node(ref), xp));
            const VectorXd rp = linearize_factor(gm, f).residual;
            gm.set_node_state(ref, node_state_from_vector(g.node(ref), xm));
            const VectorXd rm = linearize_factor(gm, f).residual;
            gm.set_node_state(ref, node_state_from_vector(g.node(ref), x0));
            fd.col(j) = (rp - rm) / (2 * h);
          }
          const double scale = std::max(lin.jacobians[k].norm(), 1e-12);
          ASSERT_LT((lin.jacobians[k] - fd).norm() / scale, 1e-6) << to_string(f.kind) << " point " << point;
        }
        ++checked[f.kind];
      }
    }
  }
  for (FactorKind k : {FactorKind::Pseudorange, FactorKind::DopplerVelocity, FactorKind::DdPseudorange,
                       FactorKind::DdCarrier, FactorKind::AmbiguityLink}) {
    EXPECT_GE(checked[k], 100) << to_string(k);
  }
}

namespace {

// Fixed anchor followed by free nodes tied by velocity and ambiguity-link
// factors: every residual is affine in the unknowns.
Graph linear_chain(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  const SatId sat{Constellation::Gps, 5};
  Graph graph;
  StateNode anchor;
  anchor.fixed = true;
  anchor.state.pos_m = test::hong_kong();
  anchor.ambiguities = {sat};
  anchor.state.dd_ambiguities_cycles[sat] = 3.0;
  graph.add_node(anchor);
  for (int i = 1; i <= n; ++i) {
    StateNode s;
    s.epoch_index = i;
    s.t = i;
    s.ambiguities = {sat};
    s.state.pos_m = test::hong_kong() + Vec3(g(rng), g(rng), g(rng)) * 50.0;
    s.state.dd_ambiguities_cycles[sat] = g(rng) * 10;
    graph.add_node(s);
    Factor v;
    v.kind = FactorKind::DopplerVelocity;
    v.node_refs = {i - 1, i};
    v.measurement = Vec3(g(rng), g(rng), g(rng));
    v.sqrt_info = MatrixXd(Eigen::Matrix3d::Identity() * (1.0 + 0.5 * std::abs(g(rng))));
    v.payload = VelocityTerm{1.0 + std::abs(g(rng))};
    graph.add_factor(v);
    Factor l;
    l.kind = FactorKind::AmbiguityLink;
    l.node_refs = {i - 1, i};
    l.measurement = VectorXd::Constant(1, 0.1 * g(rng));
    l.sqrt_info = MatrixXd::Constant(1, 1, 2.0);
    l.payload = AmbiguityLinkTerm{sat};
    graph.add_factor(l);
  }
  return graph;
}

}  // namespace

TEST(Optimize, LinearProblemSolvedInOneUndampedIteration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = linear_chain(rng, 6);
    const LinearSystem sys = linearize(g);
    const MatrixXd J(sys.J);
    VectorXd x0(sys.num_columns);
    for (int i : g.free_nodes()) x0.segment(sys.column_offset[static_cast<std::size_t>(i)], g.node(i).dim()) = node_vector(g.node(i));
    const VectorXd expected = x0 - (J.transpose() * J).ldlt().solve(J.transpose() * sys.r);
    LmOptions opt;
    opt.lambda0 = 0.0;
    opt.max_iter = 1;
    const OptimizeResult r = optimize(g, opt);
    EXPECT_EQ(r.iterations, 1);
    for (int i : g.free_nodes()) {
      const VectorXd got = node_vector(g.node(i));
      const VectorXd want = expected.segment(sys.column_offset[static_cast<std::size_t>(i)], g.node(i).dim());
      EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Optimize, AcceptedStepsNeverIncreaseCost) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SppInput in = spp_input(short_config(Severity::High, seed, 60));
    for (RobustKernel kernel : {RobustKernel::None, RobustKernel::Huber}) {
      Graph g = build_spp_graph(in.sc.rover, in.vel);
      const double before = objective(g);
      LmOptions opt;
      opt.robust = kernel;
      const OptimizeResult r = optimize(g, opt);
      double prev = r.initial_cost;
      for (double c : r.cost_history) {
        EXPECT_LE(c, prev);
        prev = c;
      }
      if (kernel == RobustKernel::None) EXPECT_LE(objective(g), before);
    }
  }
}

TEST(Optimize, MarginalCovarianceMatchesDenseInverse) {
  const RtkInput in = rtk_input(12, 4, true);
  Graph g = build_rtk_graph(in.dd, in.vel, in.base, {}, in.init);
  const OptimizeResult r = optimize(g);
  const MatrixXd full = dense_information(g).inverse();
  const LinearSystem sys = linearize(g);
  for (std::size_t k = 0; k < r.node_indices.size(); ++k) {
    const int i = r.node_indices[k];
    const MatrixXd oracle = rel_block(full, sys.column_offset[static_cast<std::size_t>(i)], g.node(i).dim());
    EXPECT_LT((r.covariances[k] - oracle).norm(), 1e-9 * oracle.norm());
    const MatrixXd direct = marginal_covariance(g, i);
    EXPECT_LT((direct - oracle).norm(), 1e-9 * oracle.norm());
    EXPECT_EQ(direct, direct.transpose());
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(direct).eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Optimize, AddingFactorsNeverIncreasesMarginalVariance) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    Graph g = linear_chain(rng, 5);
    const int n = static_cast<int>(g.nodes().size());
    std::vector<MatrixXd> before;
    for (int i = 1; i < n; ++i) before.push_back(marginal_covariance(g, i));
    // Extra velocity factor between two random free nodes.
    std::uniform_int_distribution<int> pick(1, n - 1);
    Factor extra;
    extra.kind = FactorKind::DopplerVelocity;
    int a = pick(rng), b = pick(rng);
    while (b == a) b = pick(rng);
    extra.node_refs = {a, b};
    extra.measurement = Vec3::Zero();
    extra.sqrt_info = MatrixXd(test::random_spd(rng, 3, 10.0).llt().matrixU());
    extra.payload = VelocityTerm{1.0};
    g.add_factor(extra);
    for (int i = 1; i < n; ++i) {
      const MatrixXd after = marginal_covariance(g, i);
      const MatrixXd& prior = before[static_cast<std::size_t>(i - 1)];
      for (Eigen::Index d = 0; d < after.rows(); ++d) EXPECT_LE(after(d, d), prior(d, d) * (1 + 1e-12));
      // The decrease is a PSD matrix, not just on the diagonal.
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(prior - after).eigenvalues().minCoeff(), -1e-9 * prior.norm());
    }
  }
}

namespace {

Graph translated(const Graph& g, const Vec3& c) {
  Graph out;
  out.window = g.window;
  for (StateNode n : g.nodes()) {
    n.state.pos_m += c;
    out.add_node(std::move(n));
  }
  for (Factor f : g.factors()) {
    if (auto* p = std::get_if<PseudorangeTerm>(&f.payload)) p->sat_pos += c;
    if (auto* d = std::get_if<DdPayload>(&f.payload)) {
      for (auto& t : d->terms) {
        t.sat_pos += c;
        t.master_pos += c;
      }
    }
    out.add_factor(std::move(f));
  }
  return out;
}

}  // namespace

TEST(Optimize, TranslationGauge) {
  const Vec3 c(1234.5, -678.25, 91.0);
  const SppInput spp = spp_input(short_config(Severity::Mid, 14, 10));
  const RtkInput rtk = rtk_input(14, 5, true);
  std::vector<Graph> graphs{build_spp_graph(spp.sc.rover, spp.vel),
                            build_rtk_graph(rtk.dd, rtk.vel, rtk.base, {}, rtk.init)};
  for (Graph& g : graphs) {
    Graph moved = translated(g, c);
    const OptimizeResult a = optimize(g);
    const OptimizeResult b = optimize(moved);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
      EXPECT_LT((b.states[k].pos_m - a.states[k].pos_m - c).norm(), 1e-6);
    }
  }
}

TEST(Optimize, IndependentEpochsMatchPerEpochSolutions) {
  const SppInput in = spp_input(short_config(Severity::High, 15, 10));
  std::vector<std::optional<VelocitySolution>> none(in.sc.rover.size());
  // Compare minimisers rather than where the default stopping rule lands.
  LmOptions tight;
  tight.step_tol = 1e-12;
  Graph batch = build_spp_graph(in.sc.rover, none);
  EXPECT_FALSE(batch.connected());
  const OptimizeResult all = optimize(batch, tight);
  Graph win = build_spp_graph(in.sc.rover, none);
  const OptimizeResult w1 = optimize_windowed(win, 1, tight);
  for (std::size_t k = 0; k < in.sc.rover.size(); ++k) {
    Graph one = build_spp_graph({in.sc.rover[k]}, {std::nullopt});
    const OptimizeResult r = optimize(one, tight);
    // Different LM paths round differently in the last few bits of ECEF
    // coordinates (one ulp is about 9.3e-10 m here).
    const double ulp = std::nextafter(r.states[0].pos_m.norm(), 1e300) - r.states[0].pos_m.norm();
    EXPECT_LE((all.states[k].pos_m - r.states[0].pos_m).cwiseAbs().maxCoeff(), 8 * ulp) << "epoch " << k;
    EXPECT_LE((w1.states[k].pos_m - r.states[0].pos_m).cwiseAbs().maxCoeff(), 8 * ulp) << "epoch " << k;
  }
}

TEST(Optimize, SlidingWindowOnCleanStaticData) {
  ScenarioConfig c = without_noise(static_rtk_preset(16));
  c.duration_s = 30;
  const SppInput in = spp_input(c);
  Graph g = build_spp_graph(in.sc.rover, in.vel);
  const OptimizeResult r = optimize_windowed(g, 5);
  ASSERT_EQ(r.states.size(), in.sc.rover.size());
  ASSERT_EQ(r.covariances.size(), in.sc.rover.size());
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    EXPECT_LT((r.states[k].pos_m - in.sc.truth.epochs[k].state.pos_m).norm(), 1e-3);
  }
}
