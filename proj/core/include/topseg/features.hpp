#pragma once

#include "topseg/embed.hpp"
#include "topseg/landscape.hpp"
#include "topseg/signal.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topseg {

struct LandscapeConfig {
  std::size_t layers{5};
  std::size_t grid_size{128};
  double quantile{0.95};

  // 2 * K * G values per scale.
  std::size_t scale_width() const { return 2 * layers * grid_size; }
};

// Upper end of the landscape grid [0, R] per scale group. The three global
// scales share one grid so they can be averaged.
struct GridCalibration {
  double global{1.0};
  double meso{1.0};
  double fine{1.0};

  double for_scale(ScaleName name) const;
  friend bool operator==(const GridCalibration&, const GridCalibration&) = default;
};

struct WindowSweepConfig {
  ScaleConfig scale;
  std::size_t hop_points{1};

  // L = m * W in trajectory points, capped at the trajectory length.
  std::size_t window_points(std::size_t trajectory_points) const;
};

// Window-centered descriptors of one scale, ordered by center time. Rows
// may cover only a subset of window positions (see sweep_scale).
struct ScaleStream {
  std::vector<double> center_times;
  std::vector<double> values;  // rows x width
  std::size_t width{0};
  // Signal time covered by the union of all window positions.
  double coverage_begin{0.0};
  double coverage_end{0.0};

  std::size_t rows() const { return center_times.size(); }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * width, width}; }
};

// Geometry of the window positions of a sweep.
struct SweepGeometry {
  std::size_t window_points{0};
  std::size_t windows{0};
  std::size_t hop_points{1};
  double first_center{0.0};
  double center_step{0.0};
  double coverage_begin{0.0};
  double coverage_end{0.0};

  double center_time(std::size_t w) const { return first_center + static_cast<double>(w) * center_step; }
};

SweepGeometry sweep_geometry(const EmbeddedTrajectory& traj, const WindowSweepConfig& cfg);

// Per window: sparsified Rips persistence -> H0/H1 landscapes on [0, grid_max]
// -> flattened 2KG vector attached to the window center. If `windows` is
// given, only those positions (ascending) are evaluated. Returns an empty
// stream when the trajectory is shorter than two points.
ScaleStream sweep_scale(const EmbeddedTrajectory& traj, const WindowSweepConfig& cfg,
                        const LandscapeConfig& landscape, double grid_max,
                        std::optional<std::span<const std::size_t>> windows = std::nullopt,
                        std::size_t jobs = 1);

// Frame-center query times (t + 0.5) / frame_rate.
std::vector<double> frame_times(double frame_rate, std::size_t frames);

// Window positions whose centers bracket any of the query times; linear
// interpolation at those times depends on nothing else.
std::vector<std::size_t> windows_for_queries(const SweepGeometry& geometry,
                                             std::span<const double> query_times);

// Linear interpolation of each column from center times onto the frame
// grid, constant beyond the first/last center. Returns frames x width.
std::vector<double> resample_to_frames(const ScaleStream& stream, double frame_rate, std::size_t frames);

// Per-frame stream with a definedness mask, as input to assemble_global.
struct FrameStream {
  std::vector<double> values;  // frames x width
  std::vector<char> defined;
  std::size_t width{0};
};

// Defined where the frame time lies inside the stream's coverage.
FrameStream to_frame_stream(const ScaleStream& stream, double frame_rate, std::size_t frames);

// Per-frame mean over the defined subset; frames with none defined copy the
// nearest defined frame.
std::vector<double> assemble_global(std::span<const FrameStream> streams);

struct FeatureConfig {
  std::vector<ScaleConfig> scales = default_scales();
  LandscapeConfig landscape;
  GridCalibration calibration;
  PreprocessConfig preprocess;
  double frame_rate{60.0};

  std::size_t dims() const { return 3 * landscape.scale_width(); }
  void validate() const;
};

// T x D_topo per-frame features, blocks [global | meso | fine], each [H0 | H1].
struct FrameFeatureMatrix {
  std::vector<float> values;
  std::size_t frames{0};
  std::size_t dims{0};
  double frame_rate{60.0};
  std::string recording_id;

  std::span<const float> row(std::size_t t) const { return {values.data() + t * dims, dims}; }
};

// Features of one preprocessed stream pair (fine-rate signal and its global
// decimation). Throws InsufficientLengthError when any scale cannot fit a
// window.
FrameFeatureMatrix extract_features(const Recording& fine_stream, const Recording& global_stream,
                                    const FeatureConfig& cfg, std::size_t jobs = 1);

// Chunks a preprocessed recording (inference mode), extracts every chunk and
// trims the concatenation to ceil(duration * frame_rate) frames.
FrameFeatureMatrix extract_recording_features(const Recording& preprocessed, const FeatureConfig& cfg,
                                              std::size_t jobs = 1);

// Median clip radius per scale group over a strided subset of windows.
GridCalibration calibrate_grid(std::span<const Recording> preprocessed, const FeatureConfig& cfg,
                               std::size_t windows_per_scale = 24);

void write_calibration(const std::filesystem::path& path, const GridCalibration& cal);
GridCalibration read_calibration(const std::filesystem::path& path);

// Binary cache: "TSEG", u32 version, u32 metadata length, UTF-8 JSON
// metadata, then row-major little-endian float32 values. Writes go through a
// temporary file and a rename.
void cache_write(const FrameFeatureMatrix& fm, const FeatureConfig& cfg,
                 const std::filesystem::path& path);
// Throws CacheInvalidError on any mismatch with `expected` or a damaged file.
FrameFeatureMatrix cache_read(const std::filesystem::path& path,
                              const FeatureConfig* expected = nullptr);

inline constexpr std::uint32_t kCacheVersion = 1;

}  // namespace topseg
