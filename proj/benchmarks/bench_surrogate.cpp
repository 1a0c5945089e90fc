#include <vector>

#include <benchmark/benchmark.h>

#include "bridge/acquisition.hpp"
#include "bridge/runtime.hpp"
#include "bridge/surrogate.hpp"

namespace {

struct Instance {
  std::vector<bridge::SubsetVector> inputs;
  std::vector<double> targets;
};

Instance random_instance(std::size_t m, std::size_t t, std::uint64_t seed) {
  bridge::Rng rng(seed);
  bridge::PopulationSpec spec;
  spec.size = m;
  spec.interaction_density = 0.3;
  spec.interaction_scale = 0.2;
  const auto pop = bridge::make_population(spec, rng);
  Instance inst;
  for (std::size_t i = 0; i < t; ++i) {
    inst.inputs.push_back(bridge::sample_subset(m, rng));
    inst.targets.push_back(bridge::interference_oracle(pop, inst.inputs.back()));
  }
  return inst;
}

void BM_FitGP(benchmark::State& state) {
  const auto inst = random_instance(static_cast<std::size_t>(state.range(0)),
                                    static_cast<std::size_t>(state.range(1)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bridge::fit_gp(inst.inputs, inst.targets));
  }
}
BENCHMARK(BM_FitGP)->Args({12, 16})->Args({12, 40})->Args({40, 32})->Args({75, 64});

void BM_Posterior(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto inst = random_instance(m, 32, 11);
  const auto model = bridge::fit_gp(inst.inputs, inst.targets);
  bridge::Rng rng(3);
  const auto query = bridge::sample_subset(m, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bridge::posterior(model, query));
  }
}
BENCHMARK(BM_Posterior)->Arg(12)->Arg(75);

void BM_Propose(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto inst = random_instance(m, 32, 13);
  const auto model = bridge::fit_gp(inst.inputs, inst.targets);
  bridge::ProposalConfig cfg;
  cfg.tabu.insert(inst.inputs.begin(), inst.inputs.end());
  const double incumbent = model.train_targets().maxCoeff();
  for (auto _ : state) {
    bridge::Rng rng(5);
    benchmark::DoNotOptimize(bridge::propose(model, incumbent, cfg, rng));
  }
}
BENCHMARK(BM_Propose)->Arg(12)->Arg(40);

}  // namespace

BENCHMARK_MAIN();
