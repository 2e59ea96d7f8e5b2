#pragma once

#include "topseg/config.hpp"
#include "topseg/decoder.hpp"
#include "topseg/features.hpp"
#include "topseg/signal.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace topseg::cli {

namespace fs = std::filesystem;

// *.wav files of a directory, sorted by name.
std::vector<fs::path> list_wavs(const fs::path& dir);

// Explicit flag, then config, then TOPSEG_CACHE_DIR, then <data_dir>/.topseg-cache.
fs::path resolve_cache_dir(const std::optional<fs::path>& flag, const RunConfig& cfg, const fs::path& data_dir);

fs::path cache_path(const fs::path& cache_dir, const std::string& recording_id);
fs::path calibration_path(const fs::path& cache_dir);

// Loads <cache_dir>/calibration.json, or estimates it from up to
// `max_recordings` of `wavs` and stores it there.
GridCalibration ensure_calibration(const fs::path& cache_dir, const std::vector<fs::path>& wavs,
                                   const FeatureConfig& cfg, std::ostream& log,
                                   std::size_t max_recordings = 8);

struct FeatureOutcome {
  FrameFeatureMatrix features;
  bool from_cache{false};
  double seconds{0.0};
};

// Valid cache hit, or preprocess + extract + cache write.
FeatureOutcome load_or_extract(const fs::path& wav, const fs::path& cache_dir, const FeatureConfig& cfg,
                               std::size_t jobs = 1);

// Frame labels for `frames` frames from <dir>/<id>.labels.
LabelSequence load_labels(const fs::path& dir, const std::string& recording_id, double frame_rate,
                          std::size_t frames);

// Tab-separated posterior dump with a header row.
void write_posteriors(const fs::path& path, const PosteriorSequence& p);

}  // namespace topseg::cli
