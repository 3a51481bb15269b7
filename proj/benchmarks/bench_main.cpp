#include <benchmark/benchmark.h>

#include "raretraj/oracle.hpp"
#include "raretraj/policy.hpp"
#include "raretraj/trainer.hpp"

using namespace raretraj;

namespace {

Circuit make_circuit(int copies, int layers) {
  CircuitSpec s;
  s.layout = Layout::two_qubit;
  s.copies = copies;
  s.n_layers = layers;
  return Circuit(s);
}

void BM_Expectation(benchmark::State& state) {
  const Circuit c = make_circuit(int(state.range(0)), 3);
  Rng rng = make_rng(1);
  const auto p = c.init_params(rng);
  for (auto _ : state) benchmark::DoNotOptimize(c.expectation(p, {3, 7}));
}
BENCHMARK(BM_Expectation)->Arg(1)->Arg(2)->Arg(4)->Arg(6);

void BM_Gradient(benchmark::State& state) {
  const Circuit c = make_circuit(int(state.range(0)), 3);
  Rng rng = make_rng(1);
  const auto p = c.init_params(rng);
  for (auto _ : state) benchmark::DoNotOptimize(c.gradient(p, {3, 7}));
}
BENCHMARK(BM_Gradient)->Arg(1)->Arg(4);

void BM_ComputeTables(benchmark::State& state) {
  const WalkConfig cfg{int(state.range(0)), 0.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(compute_tables(cfg));
}
BENCHMARK(BM_ComputeTables)->Arg(20)->Arg(200);

void BM_Rollout(benchmark::State& state) {
  const Circuit c = make_circuit(1, 3);
  Rng rng = make_rng(2);
  SoftmaxPqcPolicy pol(c, c.init_params(rng));
  const WalkConfig cfg{20, 0.0, 1.0};
  PolicyCache cache(cfg.horizon, pol.n_params());
  for (auto _ : state) benchmark::DoNotOptimize(rollout(pol, cfg, rng, &cache));
}
BENCHMARK(BM_Rollout);

}  // namespace
BENCHMARK_MAIN();
