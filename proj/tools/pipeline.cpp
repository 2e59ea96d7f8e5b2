#include "pipeline.hpp"

#include "topseg/error.hpp"
#include "topseg/labels.hpp"
#include "topseg/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace topseg::cli {

std::vector<fs::path> list_wavs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path resolve_cache_dir(const std::optional<fs::path>& flag, const RunConfig& cfg, const fs::path& data_dir) {
  if (flag && !flag->empty()) return *flag;
  if (!cfg.cache_dir.empty()) return cfg.cache_dir;
  if (const char* env = std::getenv("TOPSEG_CACHE_DIR"); env && *env) return env;
  return data_dir / ".topseg-cache";
}

fs::path cache_path(const fs::path& cache_dir, const std::string& recording_id) {
  return cache_dir / (recording_id + ".tseg");
}

fs::path calibration_path(const fs::path& cache_dir) { return cache_dir / "calibration.json"; }

GridCalibration ensure_calibration(const fs::path& cache_dir, const std::vector<fs::path>& wavs,
                                   const FeatureConfig& cfg, std::ostream& log,
                                   std::size_t max_recordings) {
  const fs::path path = calibration_path(cache_dir);
  if (fs::exists(path)) return read_calibration(path);
  std::vector<Recording> sample;
  for (const auto& wav : wavs) {
    if (sample.size() == max_recordings) break;
    try {
      sample.push_back(preprocess(load_wav(wav), cfg.preprocess));
    } catch (const Error& e) {
      log << "calibration: skipping " << wav.filename().string() << ": " << e.what() << '\n';
    }
  }
  if (sample.empty()) throw DataError("calibration: no readable recordings");
  const GridCalibration cal = calibrate_grid(sample, cfg);
  fs::create_directories(cache_dir);
  write_calibration(path, cal);
  log << "calibration: global=" << cal.global << " meso=" << cal.meso << " fine=" << cal.fine << " ("
      << sample.size() << " recordings)\n";
  return cal;
}

FeatureOutcome load_or_extract(const fs::path& wav, const fs::path& cache_dir, const FeatureConfig& cfg,
                               std::size_t jobs) {
  const auto start = std::chrono::steady_clock::now();
  const std::string id = wav.stem().string();
  const fs::path cached = cache_path(cache_dir, id);
  FeatureOutcome out;
  if (fs::exists(cached)) {
    try {
      out.features = cache_read(cached, &cfg);
      out.from_cache = true;
    } catch (const CacheInvalidError&) {
      out.from_cache = false;
    }
  }
  if (!out.from_cache) {
    Recording rec = load_wav(wav);
    rec.id = id;
    const Recording pre = preprocess(rec, cfg.preprocess);
    out.features = extract_recording_features(pre, cfg, jobs);
    out.features.recording_id = id;
    fs::create_directories(cache_dir);
    cache_write(out.features, cfg, cached);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

LabelSequence load_labels(const fs::path& dir, const std::string& recording_id, double frame_rate,
                          std::size_t frames) {
  const fs::path path = dir / (recording_id + ".labels");
  if (!fs::exists(path)) throw DataError("missing label file: " + path.string());
  return labels_from_intervals(read_label_file(path), frame_rate, frames);
}

void write_posteriors(const fs::path& path, const PosteriorSequence& p) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "frame\ttime";
  for (HeartState s : kAllStates) out << '\t' << to_string(s);
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < p.frames; ++t) {
    std::snprintf(buf, sizeof buf, "%zu\t%.6f", t, (static_cast<double>(t) + 0.5) / p.frame_rate);
    out << buf;
    for (double v : p.row(t)) {
      std::snprintf(buf, sizeof buf, "\t%.9f", v);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace topseg::cli
