#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace topseg {

// Mono waveform with its sample rate. After preprocessing the samples are
// dimensionless (z-scored).
struct Recording {
  std::string id;
  std::vector<double> samples;
  double sample_rate{0.0};
  std::optional<std::filesystem::path> label_path;

  double duration() const {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct PreprocessConfig {
  double band_low{20.0};
  double band_high{200.0};
  int filter_order{4};
  double target_rate_fine{600.0};
  double target_rate_global{60.0};
  double chunk_seconds{10.0};

  // Throws ConfigError unless 0 < band_low < band_high < target_rate_fine / 2.
  void validate() const;
};

// Reads a PCM WAV file (8/16/24/32-bit integer or 32-bit float). Only the
// first channel is kept; integer samples are scaled to [-1, 1).
Recording load_wav(const std::filesystem::path& path);

// Writes 16-bit PCM mono. Samples are clamped to [-1, 1].
void write_wav(const std::filesystem::path& path, const Recording& rec);

// Forward-backward Butterworth band-pass (zero phase). Requires
// rec.sample_rate > 2 * band_high.
Recording bandpass_zero_phase(const Recording& rec, const PreprocessConfig& cfg);

// Anti-aliased rational resampling to target_rate (low-pass at
// 0.45 * target_rate, polyphase FIR). Integer ratios reduce to plain
// decimation. Output length is ceil(n * up / down).
Recording decimate_polyphase(const Recording& rec, double target_rate);

// Zero mean, unit population standard deviation.
Recording zscore(const Recording& rec);

enum class ChunkMode {
  kTraining,   // trailing remainder shorter than a chunk is dropped
  kInference,  // trailing remainder is kept and looped up to a full chunk
};

// Splits into non-overlapping chunk_seconds pieces; recordings (or inference
// remainders) shorter than one chunk are repeated circularly to full length.
std::vector<Recording> chunk_or_loop(const Recording& rec, double chunk_seconds,
                                     ChunkMode mode);

// band-pass at the native rate, resample to target_rate_fine, z-score.
Recording preprocess(const Recording& rec, const PreprocessConfig& cfg);

}  // namespace topseg
