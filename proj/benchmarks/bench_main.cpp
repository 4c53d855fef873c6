#include "gnssfgo/baselines.hpp"
#include "gnssfgo/factor_graph.hpp"
#include "gnssfgo/lambda.hpp"
#include "gnssfgo/pipeline.hpp"
#include "gnssfgo/simulator.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace gnssfgo;

namespace {

const Scenario& urban() {
  static const Scenario sc = generate(urban_canyon_preset(Severity::High, 1));
  return sc;
}

const Scenario& rtk() {
  static const Scenario sc = [] {
    ScenarioConfig c = static_rtk_preset(1);
    c.duration_s = 60;
    return generate(c);
  }();
  return sc;
}

void BM_WlsEpoch(benchmark::State& state) {
  const Epoch& e = urban().rover.front();
  for (auto _ : state) benchmark::DoNotOptimize(wls_spp(e));
}
BENCHMARK(BM_WlsEpoch);

void BM_EkfRun(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run_ekf(urban().rover));
}
BENCHMARK(BM_EkfRun)->Unit(benchmark::kMillisecond);

void BM_FgoBatch(benchmark::State& state) {
  const auto& rover = urban().rover;
  const std::vector<Epoch> epochs(rover.begin(), rover.begin() + state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_fgo(epochs));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FgoBatch)->Arg(25)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond)->Complexity();

void BM_FgoWindowed(benchmark::State& state) {
  PipelineOptions o;
  o.window = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_fgo(urban().rover, o));
}
BENCHMARK(BM_FgoWindowed)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_RtkFgo(benchmark::State& state) {
  const Scenario& sc = rtk();
  for (auto _ : state) benchmark::DoNotOptimize(run_rtk_fgo(sc.rover, sc.base, *sc.truth.base_pos_m));
}
BENCHMARK(BM_RtkFgo)->Unit(benchmark::kMillisecond);

void BM_LambdaSearch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  const Eigen::MatrixXd Q = 0.01 * (A * A.transpose()) + 1e-3 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd a(n);
  for (int i = 0; i < n; ++i) a(i) = 10.0 * g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(lambda::search(a, Q));
}
BENCHMARK(BM_LambdaSearch)->Arg(4)->Arg(8)->Arg(16)->Arg(24);

}  // namespace

BENCHMARK_MAIN();
