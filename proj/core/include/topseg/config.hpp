#pragma once

#include "topseg/decoder.hpp"
#include "topseg/features.hpp"
#include "topseg/refine.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace topseg {

// Every tunable of a run; defaults reproduce the reference configuration.
struct RunConfig {
  FeatureConfig features;
  DecoderConfig decoder;
  RefineConfig refine;
  DurationConfig durations;
  double tolerance{0.060};
  double budget{1.0};            // fraction of subjects used for training
  double validation_fraction{0.2};  // fraction of training subjects held out
  std::uint64_t seed{1};
  std::filesystem::path data_dir;
  std::filesystem::path cache_dir;
  std::filesystem::path model_path;
  std::filesystem::path output_dir;

  void validate() const;
};

// Overlays an INI-style file ([preprocess], [scales.<name>], [features],
// [decoder], [refine], [decode], [eval], [paths], [run]) onto `cfg`.
// Unknown sections or keys and malformed values throw ConfigError.
void apply_config_file(const std::filesystem::path& path, RunConfig& cfg);

// The file-format counterpart of apply_config_file.
std::string dump_config(const RunConfig& cfg);

}  // namespace topseg
