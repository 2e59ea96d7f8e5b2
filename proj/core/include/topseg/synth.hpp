#pragma once

#include "topseg/eval.hpp"
#include "topseg/labels.hpp"
#include "topseg/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace topseg {

struct SynthConfig {
  double heart_rate{75.0};  // bpm
  double s1_dur_ms{100.0};
  double s2_dur_ms{90.0};
  double s1_freq{60.0};
  double s2_freq{85.0};
  double noise_snr{20.0};  // dB relative to the clean signal; +inf disables noise
  double hr_jitter{0.05};  // per-cycle period jitter, uniform +-fraction
  double duration{10.0};   // seconds
  double sample_rate{2000.0};
  double label_rate{60.0};
  std::uint64_t seed{0};

  // Throws ConfigError when S1 + systole + S2 does not fit the shortest
  // jittered period, or any field is out of range.
  void validate() const;
};

struct SynthRecording {
  Recording recording;
  std::vector<LabelInterval> intervals;
  LabelSequence labels;
};

// Gaussian-windowed tone bursts (sigma = duration / 6) cut to their label
// intervals. S2 starts 0.3 periods after the end of S1.
SynthRecording generate(const SynthConfig& cfg);

struct CorpusOptions {
  std::size_t recordings{50};
  std::size_t recordings_per_subject{2};
  double min_heart_rate{60.0};
  double max_heart_rate{100.0};
  SynthConfig base;
  std::uint64_t seed{7};
};

// Writes <id>.wav, <id>.labels and manifest.tsv; returns the manifest.
std::vector<ManifestEntry> write_synth_corpus(const std::filesystem::path& out_dir, const CorpusOptions& opts);

}  // namespace topseg
