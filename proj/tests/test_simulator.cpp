#include "gnssfgo/baselines.hpp"
#include "gnssfgo/epoch_io.hpp"
#include "gnssfgo/error.hpp"
#include "gnssfgo/evaluate.hpp"
#include "gnssfgo/pipeline.hpp"
#include "gnssfgo/rng.hpp"
#include "gnssfgo/simulator.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace gnssfgo;

namespace {

std::string serialize(const Scenario& sc) {
  std::ostringstream os;
  write_epoch_stream(os, sc.rover);
  write_epoch_stream(os, sc.base);
  write_truth_stream(os, sc.truth);
  return os.str();
}

}  // namespace

TEST(Rng, StreamsAreIndependentOfConstructionOrder) {
  const SatId a{Constellation::Gps, 3}, b{Constellation::Beidou, 7};
  Rng a1(42, 0, a, RngChannel::Code);
  std::vector<double> ref;
  for (int i = 0; i < 10; ++i) ref.push_back(a1.normal());
  Rng other(42, 0, b, RngChannel::Code);
  for (int i = 0; i < 100; ++i) other.normal();
  Rng a2(42, 0, a, RngChannel::Code);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a2.normal(), ref[static_cast<std::size_t>(i)]);
  Rng carrier(42, 0, a, RngChannel::Carrier);
  Rng base(42, 1, a, RngChannel::Code);
  EXPECT_NE(carrier.normal(), ref[0]);
  EXPECT_NE(base.normal(), ref[0]);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng r(7);
  double s = 0, s2 = 0, u = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
    const double x = r.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    u += x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
  EXPECT_NEAR(u / n, 0.5, 0.005);
  for (int i = 0; i < 1000; ++i) {
    const auto k = r.uniform_int(-3, 3);
    ASSERT_GE(k, -3);
    ASSERT_LE(k, 3);
  }
}

TEST(Simulator, SameSeedIsByteIdentical) {
  ScenarioConfig c = static_rtk_preset(3);
  c.duration_s = 30;
  EXPECT_EQ(serialize(generate(c)), serialize(generate(c)));
  ScenarioConfig d = c;
  d.seed = 4;
  EXPECT_NE(serialize(generate(c)), serialize(generate(d)));
}

TEST(Simulator, RejectsInvalidConfig) {
  ScenarioConfig c;
  c.duration_s = -1;
  EXPECT_THROW(generate(c), Error);
  c = ScenarioConfig{};
  c.nlos.prob_per_sat_epoch = 1.5;
  EXPECT_THROW(generate(c), Error);
  c = ScenarioConfig{};
  c.nlos.bias_min_m = 10;
  c.nlos.bias_max_m = 5;
  EXPECT_THROW(generate(c), Error);
}

TEST(Simulator, NlosFractionConcentrates) {
  ScenarioConfig c = urban_canyon_preset(Severity::High, 5);
  // Independent sat-epochs: no elevation doubling, one draw per epoch.
  c.nlos.elevation_mask_deg = 0.0;
  c.nlos.dwell_s = 1.0;
  c.duration_s = 625;
  const Scenario sc = generate(c);
  long flagged = 0, total = 0;
  for (const auto& e : sc.rover) {
    for (const auto& o : e.observations) {
      flagged += o.nlos_flag ? 1 : 0;
      ++total;
    }
  }
  ASSERT_GE(total, 10000);
  const double frac = static_cast<double>(flagged) / static_cast<double>(total);
  EXPECT_GE(frac, 0.27);
  EXPECT_LE(frac, 0.33);
}

TEST(Simulator, NlosPersistsOverDwellBlocks) {
  ScenarioConfig c = urban_canyon_preset(Severity::High, 6);
  c.duration_s = 100;
  c.noise.enabled = false;
  const Scenario sc = generate(c);
  // With 5 s blocks a label changes at most once per 5 epochs per satellite.
  std::map<SatId, std::vector<bool>> seq;
  for (const auto& te : sc.truth.epochs)
    for (const auto& [id, on] : te.nlos) seq[id].push_back(on);
  for (const auto& [id, v] : seq) {
    int last_change = -100;
    for (std::size_t k = 1; k < v.size(); ++k) {
      if (v[k] == v[k - 1]) continue;
      EXPECT_GE(static_cast<int>(k) - last_change, 5) << id.str();
      last_change = static_cast<int>(k);
    }
  }
  // Biased observations carry a positive excess over the clean model.
  ScenarioConfig no_nlos = c;
  no_nlos.nlos.prob_per_sat_epoch = 0.0;
  const Scenario clean = generate(no_nlos);
  for (std::size_t k = 0; k < sc.rover.size(); ++k) {
    for (std::size_t j = 0; j < sc.rover[k].observations.size(); ++j) {
      const auto& o = sc.rover[k].observations[j];
      if (!o.nlos_flag) continue;
      const double excess = o.pseudorange_m - clean.rover[k].observations[j].pseudorange_m;
      EXPECT_GE(excess, 10.0 - 1e-6);
      EXPECT_LE(excess, 80.0 + 1e-6);
      ASSERT_TRUE(o.carrier_phase_cycles.has_value());
      EXPECT_NEAR(*o.carrier_phase_cycles, *clean.rover[k].observations[j].carrier_phase_cycles, 1e-6);
    }
  }
}

TEST(Simulator, CarrierMinusCodeDivergence) {
  const Scenario sc = test::zero_noise_scenario(7, true, 10);
  for (const auto& e : sc.rover) {
    for (const auto& o : e.observations) {
      const double lhs = o.wavelength() * *o.carrier_phase_cycles - o.pseudorange_m;
      const double rhs = o.wavelength() * static_cast<double>(sc.truth.rover_ambiguities.at(o.sat)) - 2.0 * o.iono_corr_m;
      EXPECT_NEAR(lhs, rhs, 1e-7);
    }
  }
}

TEST(Simulator, ZeroBaselineDoubleDifferences) {
  ScenarioConfig c = without_noise(static_rtk_preset(8));
  c.duration_s = 5;
  c.base_station_enu = Vec3::Zero();
  const Scenario sc = generate(c);
  const Vec3 base = *sc.truth.base_pos_m;
  EXPECT_LT((base - sc.truth.epochs[0].state.pos_m).norm(), 1e-6);
  for (std::size_t k = 0; k < sc.rover.size(); ++k) {
    const DdEpoch dd = form_double_differences(sc.rover[k], sc.base[k], base);
    for (const auto& o : dd.obs) {
      const auto& t = sc.truth;
      const double dn = static_cast<double>((t.rover_ambiguities.at(o.sat_id) - t.base_ambiguities.at(o.sat_id)) -
                                            (t.rover_ambiguities.at(o.master_id) - t.base_ambiguities.at(o.master_id)));
      EXPECT_NEAR(o.dd_pseudorange_m, 0.0, 1e-7);
      EXPECT_NEAR(*o.dd_carrier_m, o.wavelength_m * dn, 1e-7);
    }
  }
}

TEST(Simulator, ZeroNoiseResidualsAtTruth) {
  const Scenario sc = test::zero_noise_scenario(9, true, 10);
  const Vec3 base = *sc.truth.base_pos_m;
  double worst_code = 0, worst_dd = 0, worst_rr = 0;
  for (std::size_t k = 0; k < sc.rover.size(); ++k) {
    const auto& truth = sc.truth.epochs[k].state;
    for (const auto& o : sc.rover[k].observations) {
      worst_code = std::max(worst_code, std::abs(o.corrected_pseudorange() - pseudorange_predict(truth, o)));
      const double rr = expected_range_rate(o.sat_pos_m, o.sat_vel_mps, truth.pos_m, truth.vel_mps) +
                        truth.clock_drift_mps - o.sat_clock_drift_mps;
      worst_rr = std::max(worst_rr, std::abs(-o.wavelength() * *o.doppler_hz - rr));
    }
    const DdEpoch dd = form_double_differences(sc.rover[k], sc.base[k], base);
    ReceiverState s = truth;
    for (const auto& o : dd.obs) {
      const auto& t = sc.truth;
      s.dd_ambiguities_cycles[o.sat_id] =
          static_cast<double>((t.rover_ambiguities.at(o.sat_id) - t.base_ambiguities.at(o.sat_id)) -
                              (t.rover_ambiguities.at(o.master_id) - t.base_ambiguities.at(o.master_id)));
    }
    for (const auto& o : dd.obs) {
      worst_dd = std::max(worst_dd, std::abs(o.dd_pseudorange_m - dd_predict(s, o, base, DdKind::Pseudorange)));
      worst_dd = std::max(worst_dd, std::abs(*o.dd_carrier_m - dd_predict(s, o, base, DdKind::Carrier)));
    }
  }
  // Undifferenced code sits near 2e7 m, where one ulp is ~4e-9 m.
  EXPECT_LT(worst_code, 2e-8);
  EXPECT_LT(worst_dd, 1e-8);
  EXPECT_LT(worst_rr, 1e-9);
}

TEST(Simulator, ZeroNoiseWlsRecoversTruth) {
  const Scenario sc = test::zero_noise_scenario(10, false, 30);
  for (std::size_t k = 0; k < sc.rover.size(); ++k) {
    EXPECT_LT((wls_spp(sc.rover[k]).state.pos_m - sc.truth.epochs[k].state.pos_m).norm(), 1e-4);
  }
}

TEST(Presets, DocumentedTable) {
  const ScenarioConfig h = urban_canyon_preset(Severity::High);
  const ScenarioConfig m = urban_canyon_preset(Severity::Mid);
  const ScenarioConfig l = urban_canyon_preset(Severity::Low);
  for (const auto* c : {&h, &m, &l}) EXPECT_EQ(c->nlos.elevation_mask_deg, 30.0);
  EXPECT_EQ(h.nlos.prob_per_sat_epoch, 0.30);
  EXPECT_EQ(h.nlos.bias_min_m, 10.0);
  EXPECT_EQ(h.nlos.bias_max_m, 80.0);
  EXPECT_EQ(m.nlos.prob_per_sat_epoch, 0.15);
  EXPECT_EQ(m.nlos.bias_min_m, 5.0);
  EXPECT_EQ(m.nlos.bias_max_m, 40.0);
  EXPECT_EQ(l.nlos.prob_per_sat_epoch, 0.05);
  EXPECT_EQ(l.nlos.bias_min_m, 2.0);
  EXPECT_EQ(l.nlos.bias_max_m, 15.0);
  EXPECT_EQ(h.num_epochs(), 200);
  const ScenarioConfig r = static_rtk_preset();
  EXPECT_EQ(r.trajectory.kind, TrajectoryKind::Static);
  ASSERT_TRUE(r.base_station_enu);
  EXPECT_NEAR(r.base_station_enu->norm(), 50.0, 1e-12);
  EXPECT_EQ(r.nlos.prob_per_sat_epoch, 0.15);
  EXPECT_EQ(parse_severity("high"), Severity::High);
  EXPECT_EQ(to_string(Severity::Low), "low");
  EXPECT_THROW(parse_severity("extreme"), Error);
}

TEST(Presets, WlsErrorRegimes) {
  double high = 0, low = 0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    const Scenario h = generate(urban_canyon_preset(Severity::High, static_cast<std::uint64_t>(s)));
    const Scenario l = generate(urban_canyon_preset(Severity::Low, static_cast<std::uint64_t>(s)));
    high += evaluate(run_wls(h.rover), h.truth).mean_m;
    low += evaluate(run_wls(l.rover), l.truth).mean_m;
  }
  EXPECT_GT(high / seeds, 5.0);
  EXPECT_LT(low / seeds, 3.0);
}
