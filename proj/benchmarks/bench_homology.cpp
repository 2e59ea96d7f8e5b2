#include "topseg/homology.hpp"
#include "topseg/landscape.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

namespace {

using namespace topseg;

// Noisy closed loop in 3-d, the typical shape of one embedded heart cycle.
std::vector<double> noisy_loop(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> coords;
  coords.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    coords.push_back(std::cos(a) + noise(rng));
    coords.push_back(std::sin(a) + noise(rng));
    coords.push_back(0.3 * std::sin(2.0 * a) + noise(rng));
  }
  return coords;
}

void BM_SparseGraph(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto coords = noisy_loop(n, 1);
  const PointCloudView view{coords, n, 3};
  for (auto _ : state) benchmark::DoNotOptimize(build_sparse_edges(view, {}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SparseGraph)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_Persistence(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto coords = noisy_loop(n, 2);
  const SparseGraph g = build_sparse_edges(PointCloudView{coords, n, 3}, {});
  for (auto _ : state) benchmark::DoNotOptimize(compute_persistence(g));
  state.counters["edges"] = static_cast<double>(g.edges.size());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Persistence)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_Oracle(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto coords = noisy_loop(n, 3);
  const PointCloudView view{coords, n, 3};
  for (auto _ : state) benchmark::DoNotOptimize(oracle_vr_persistence(view, 10.0));
}
BENCHMARK(BM_Oracle)->DenseRange(8, 16, 4);

void BM_Landscape(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto coords = noisy_loop(n, 4);
  const SparseGraph g = build_sparse_edges(PointCloudView{coords, n, 3}, {});
  const PersistenceDiagram d = compute_persistence(g);
  for (auto _ : state) {
    benchmark::DoNotOptimize(diagram_to_landscape(d, 0, 5, 128, 0.0, g.clip_radius));
    benchmark::DoNotOptimize(diagram_to_landscape(d, 1, 5, 128, 0.0, g.clip_radius));
  }
  state.counters["pairs"] = static_cast<double>(d.pairs.size());
}
BENCHMARK(BM_Landscape)->RangeMultiplier(4)->Range(64, 1024);

}  // namespace
