#include "topseg/refine.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace topseg;

PosteriorSequence random_posteriors(std::size_t frames, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  PosteriorSequence p;
  p.frames = frames;
  p.values.resize(frames * kNumStates);
  for (std::size_t t = 0; t < frames; ++t) {
    double s = 0.0;
    for (double& v : p.row(t)) s += (v = e(rng));
    for (double& v : p.row(t)) v /= s;
  }
  return p;
}

void BM_RefinePgd(benchmark::State& state) {
  const auto frames = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto p_hat = random_posteriors(frames, rng);
  TopologyTarget target;
  for (std::size_t t = 0; t < frames; ++t) {
    target.r.push_back(u(rng));
    target.eta.push_back(u(rng));
  }
  const RefineConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(refine_pgd(p_hat, target, cfg));
  state.SetComplexityN(state.range(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RefinePgd)->RangeMultiplier(10)->Range(1000, 100000)->Complexity(benchmark::oN);

void BM_ConstrainedDecode(benchmark::State& state) {
  const auto frames = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto p = random_posteriors(frames, rng);
  const DurationConfig durations;
  for (auto _ : state) benchmark::DoNotOptimize(constrained_decode(p, durations));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConstrainedDecode)->RangeMultiplier(10)->Range(1000, 100000)->Complexity(benchmark::oN);

void BM_SimplexProject(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::array<double, kNumStates> v{g(rng), g(rng), g(rng), g(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(simplex_project(v));
}
BENCHMARK(BM_SimplexProject);

}  // namespace
