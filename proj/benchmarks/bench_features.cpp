#include "topseg/features.hpp"
#include "topseg/synth.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace topseg;

Recording synthetic(double seconds) {
  SynthConfig cfg;
  cfg.duration = seconds;
  cfg.seed = 5;
  return generate(cfg).recording;
}

void BM_Preprocess(benchmark::State& state) {
  const Recording rec = synthetic(static_cast<double>(state.range(0)));
  const PreprocessConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(preprocess(rec, cfg));
}
BENCHMARK(BM_Preprocess)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_ExtractRecording(benchmark::State& state) {
  FeatureConfig cfg;
  const Recording rec = preprocess(synthetic(static_cast<double>(state.range(0))), cfg.preprocess);
  const std::vector<Recording> calib{rec};
  cfg.calibration = calibrate_grid(calib, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(extract_recording_features(rec, cfg));
  state.counters["audio_s_per_s"] =
      benchmark::Counter(static_cast<double>(state.range(0) * state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ExtractRecording)->Arg(10)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace
