#include "topseg/features.hpp"

#include "topseg/error.hpp"
#include "topseg/homology.hpp"
#include "topseg/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace topseg {

namespace {

// Smallest trajectory that still gives a meaningful k-NN graph.
constexpr std::size_t kMinTrajectoryPoints = 8;

std::size_t frame_count(const Recording& rec, double frame_rate) {
  const long long n = static_cast<long long>(rec.samples.size());
  const long long fr = std::llround(frame_rate);
  const long long sr = std::llround(rec.sample_rate);
  if (std::abs(frame_rate - fr) < 1e-9 && std::abs(rec.sample_rate - sr) < 1e-9 && sr > 0) {
    return static_cast<std::size_t>((n * fr + sr - 1) / sr);
  }
  return static_cast<std::size_t>(std::ceil(n * frame_rate / rec.sample_rate - 1e-9));
}

// Index of the last window whose center is <= t, or -1.
long long last_center_at_or_before(const SweepGeometry& g, double t) {
  if (g.windows == 0 || g.center_time(0) > t) return -1;
  const double u = (t - g.first_center) / g.center_step;
  auto w = static_cast<long long>(std::clamp(std::floor(u), 0.0, static_cast<double>(g.windows - 1)));
  while (w > 0 && g.center_time(static_cast<std::size_t>(w)) > t) --w;
  while (w + 1 < static_cast<long long>(g.windows) && g.center_time(static_cast<std::size_t>(w + 1)) <= t) ++w;
  return w;
}

}  // namespace

double GridCalibration::for_scale(ScaleName name) const {
  if (is_global(name)) return global;
  return name == ScaleName::kMeso ? meso : fine;
}

std::size_t WindowSweepConfig::window_points(std::size_t trajectory_points) const {
  return std::min(scale.window_points(), trajectory_points);
}

SweepGeometry sweep_geometry(const EmbeddedTrajectory& traj, const WindowSweepConfig& cfg) {
  SweepGeometry g;
  const std::size_t points = traj.size();
  g.hop_points = std::max<std::size_t>(1, cfg.hop_points);
  g.window_points = cfg.window_points(points);
  if (points < 2 || g.window_points < 2) return g;
  g.windows = (points - g.window_points) / g.hop_points + 1;
  const double span = static_cast<double>((traj.dim - 1) * traj.delay_samples);
  const double half = (static_cast<double>(g.window_points - 1) + span) / 2.0;
  g.first_center = traj.origin_time + half / traj.stream_rate;
  g.center_step = static_cast<double>(g.hop_points) / traj.stream_rate;
  g.coverage_begin = traj.origin_time;
  g.coverage_end = traj.origin_time +
                   (static_cast<double>((g.windows - 1) * g.hop_points + g.window_points - 1) + span) /
                       traj.stream_rate;
  return g;
}

ScaleStream sweep_scale(const EmbeddedTrajectory& traj, const WindowSweepConfig& cfg,
                        const LandscapeConfig& landscape, double grid_max,
                        std::optional<std::span<const std::size_t>> windows, std::size_t jobs) {
  const SweepGeometry geo = sweep_geometry(traj, cfg);
  ScaleStream stream;
  stream.width = landscape.scale_width();
  if (geo.windows == 0) return stream;
  stream.coverage_begin = geo.coverage_begin;
  stream.coverage_end = geo.coverage_end;

  std::vector<std::size_t> positions;
  if (windows) {
    positions.assign(windows->begin(), windows->end());
    for (std::size_t w : positions) {
      if (w >= geo.windows) throw ConfigError("sweep_scale: window index out of range");
    }
  } else {
    positions.resize(geo.windows);
    for (std::size_t w = 0; w < geo.windows; ++w) positions[w] = w;
  }

  const PointCloudView cloud{traj.coords, traj.size(), static_cast<std::size_t>(traj.dim)};
  const BandedDistances band(cloud, geo.window_points - 1);
  const SparsifyOptions opts{landscape.quantile, std::nullopt};

  stream.center_times.resize(positions.size());
  stream.values.assign(positions.size() * stream.width, 0.0);
  parallel_for(positions.size(), jobs, [&](std::size_t r) {
    const std::size_t first = positions[r] * geo.hop_points;
    const SparseGraph graph = build_sparse_edges(band, first, geo.window_points, opts);
    const PersistenceDiagram diag = compute_persistence(graph);
    const LandscapeVector h0 =
        diagram_to_landscape(diag, 0, landscape.layers, landscape.grid_size, 0.0, grid_max);
    const LandscapeVector h1 =
        diagram_to_landscape(diag, 1, landscape.layers, landscape.grid_size, 0.0, grid_max);
    const std::vector<double> flat = flatten(h0, h1);
    std::copy(flat.begin(), flat.end(), stream.values.begin() + static_cast<std::ptrdiff_t>(r * stream.width));
    stream.center_times[r] = geo.center_time(positions[r]);
  });
  return stream;
}

std::vector<double> frame_times(double frame_rate, std::size_t frames) {
  std::vector<double> t(frames);
  for (std::size_t i = 0; i < frames; ++i) t[i] = (static_cast<double>(i) + 0.5) / frame_rate;
  return t;
}

std::vector<std::size_t> windows_for_queries(const SweepGeometry& geometry,
                                             std::span<const double> query_times) {
  std::vector<std::size_t> out;
  if (geometry.windows == 0) return out;
  for (double t : query_times) {
    const long long a = last_center_at_or_before(geometry, t);
    if (a < 0) {
      out.push_back(0);
      continue;
    }
    out.push_back(static_cast<std::size_t>(a));
    if (static_cast<std::size_t>(a) + 1 < geometry.windows) out.push_back(static_cast<std::size_t>(a) + 1);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> resample_to_frames(const ScaleStream& stream, double frame_rate, std::size_t frames) {
  if (stream.rows() == 0) throw DataError("resample_to_frames: empty stream");
  const std::size_t w = stream.width;
  std::vector<double> out(frames * w);
  const auto& c = stream.center_times;
  for (std::size_t t = 0; t < frames; ++t) {
    const double q = (static_cast<double>(t) + 0.5) / frame_rate;
    double* dst = out.data() + t * w;
    const auto b = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), q) - c.begin());
    if (b == 0 || b == c.size()) {
      const auto src = stream.row(b == 0 ? 0 : c.size() - 1);
      std::copy(src.begin(), src.end(), dst);
      continue;
    }
    const double frac = (q - c[b - 1]) / (c[b] - c[b - 1]);
    const auto lo = stream.row(b - 1);
    const auto hi = stream.row(b);
    for (std::size_t k = 0; k < w; ++k) dst[k] = lo[k] + frac * (hi[k] - lo[k]);
  }
  return out;
}

FrameStream to_frame_stream(const ScaleStream& stream, double frame_rate, std::size_t frames) {
  FrameStream fs;
  fs.width = stream.width;
  if (stream.rows() == 0) {
    fs.values.assign(frames * stream.width, 0.0);
    fs.defined.assign(frames, 0);
    return fs;
  }
  fs.values = resample_to_frames(stream, frame_rate, frames);
  fs.defined.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double q = (static_cast<double>(t) + 0.5) / frame_rate;
    fs.defined[t] = (q >= stream.coverage_begin && q <= stream.coverage_end) ? 1 : 0;
  }
  return fs;
}

std::vector<double> assemble_global(std::span<const FrameStream> streams) {
  if (streams.empty()) throw AggregationError("assemble_global: no streams");
  const std::size_t w = streams.front().width;
  const std::size_t frames = streams.front().defined.size();
  for (const auto& s : streams) {
    if (s.width != w || s.defined.size() != frames) {
      throw AggregationError("assemble_global: stream shapes differ");
    }
  }
  std::vector<double> out(frames * w, 0.0);
  std::vector<char> have(frames, 0);
  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t count = 0;
    double* dst = out.data() + t * w;
    for (const auto& s : streams) {
      if (!s.defined[t]) continue;
      const double* src = s.values.data() + t * w;
      for (std::size_t k = 0; k < w; ++k) dst[k] += src[k];
      ++count;
    }
    if (count > 0) {
      const double inv = 1.0 / static_cast<double>(count);
      for (std::size_t k = 0; k < w; ++k) dst[k] *= inv;
      have[t] = 1;
    }
  }
  // Edge replication from the nearest defined frame (earlier frame wins ties).
  std::vector<long long> nearest(frames, -1);
  long long last = -1;
  for (std::size_t t = 0; t < frames; ++t) {
    if (have[t]) last = static_cast<long long>(t);
    nearest[t] = last;
  }
  long long next = -1;
  for (std::size_t t = frames; t-- > 0;) {
    if (have[t]) {
      next = static_cast<long long>(t);
      continue;
    }
    long long src = nearest[t];
    if (next >= 0 && (src < 0 || next - static_cast<long long>(t) < static_cast<long long>(t) - src)) src = next;
    if (src >= 0) {
      std::copy(out.begin() + src * static_cast<long long>(w), out.begin() + (src + 1) * static_cast<long long>(w),
                out.begin() + static_cast<long long>(t * w));
    }
  }
  return out;
}

void FeatureConfig::validate() const {
  if (scales.size() != 5) throw ConfigError("features: expected five scale configurations");
  for (const auto& s : scales) s.validate();
  if (landscape.layers < 1 || landscape.grid_size < 2) throw ConfigError("features: need K >= 1, G >= 2");
  if (!(landscape.quantile > 0.0 && landscape.quantile <= 1.0)) {
    throw ConfigError("features: quantile must lie in (0, 1]");
  }
  if (!(calibration.global > 0.0 && calibration.meso > 0.0 && calibration.fine > 0.0)) {
    throw ConfigError("features: grid calibration must be positive");
  }
  if (!(frame_rate > 0.0)) throw ConfigError("features: frame rate must be positive");
  preprocess.validate();
}

FrameFeatureMatrix extract_features(const Recording& fine_stream, const Recording& global_stream,
                                    const FeatureConfig& cfg, std::size_t jobs) {
  cfg.validate();
  const std::size_t frames = frame_count(fine_stream, cfg.frame_rate);
  const std::size_t width = cfg.landscape.scale_width();
  const std::vector<double> queries = frame_times(cfg.frame_rate, frames);

  auto scale_stream = [&](const ScaleConfig& scale) {
    const Recording& src = is_global(scale.name) ? global_stream : fine_stream;
    EmbeddedTrajectory traj;
    try {
      traj = delay_embed(src, scale);
    } catch (const InsufficientLengthError&) {
      throw InsufficientLengthError("recording " + fine_stream.id + " too short for scale " +
                                    std::string(to_string(scale.name)));
    }
    if (traj.size() < kMinTrajectoryPoints) {
      throw InsufficientLengthError("recording " + fine_stream.id + " too short for scale " +
                                    std::string(to_string(scale.name)));
    }
    const WindowSweepConfig sweep{scale, 1};
    const SweepGeometry geo = sweep_geometry(traj, sweep);
    const std::vector<std::size_t> needed = windows_for_queries(geo, queries);
    return sweep_scale(traj, sweep, cfg.landscape, cfg.calibration.for_scale(scale.name),
                       std::span<const std::size_t>(needed), jobs);
  };

  std::vector<FrameStream> globals;
  std::vector<double> meso;
  std::vector<double> fine;
  for (const ScaleConfig& scale : cfg.scales) {
    const ScaleStream s = scale_stream(scale);
    if (is_global(scale.name)) {
      globals.push_back(to_frame_stream(s, cfg.frame_rate, frames));
    } else if (scale.name == ScaleName::kMeso) {
      meso = resample_to_frames(s, cfg.frame_rate, frames);
    } else {
      fine = resample_to_frames(s, cfg.frame_rate, frames);
    }
  }
  if (globals.size() != 3 || meso.empty() || fine.empty()) {
    throw ConfigError("features: need Global2/4/8, Meso and Fine scales");
  }
  const std::vector<double> global = assemble_global(globals);

  FrameFeatureMatrix fm;
  fm.frames = frames;
  fm.dims = 3 * width;
  fm.frame_rate = cfg.frame_rate;
  fm.recording_id = fine_stream.id;
  fm.values.resize(frames * fm.dims);
  for (std::size_t t = 0; t < frames; ++t) {
    float* dst = fm.values.data() + t * fm.dims;
    for (std::size_t k = 0; k < width; ++k) {
      dst[k] = static_cast<float>(global[t * width + k]);
      dst[width + k] = static_cast<float>(meso[t * width + k]);
      dst[2 * width + k] = static_cast<float>(fine[t * width + k]);
    }
  }
  return fm;
}

FrameFeatureMatrix extract_recording_features(const Recording& preprocessed, const FeatureConfig& cfg,
                                              std::size_t jobs) {
  cfg.validate();
  const std::size_t total = frame_count(preprocessed, cfg.frame_rate);
  const std::vector<Recording> chunks =
      chunk_or_loop(preprocessed, cfg.preprocess.chunk_seconds, ChunkMode::kInference);
  FrameFeatureMatrix out;
  out.dims = cfg.dims();
  out.frame_rate = cfg.frame_rate;
  out.recording_id = preprocessed.id;
  out.values.reserve(total * out.dims);
  for (const Recording& chunk : chunks) {
    const Recording global = decimate_polyphase(chunk, cfg.preprocess.target_rate_global);
    FrameFeatureMatrix part = extract_features(chunk, global, cfg, jobs);
    const std::size_t take = std::min(part.frames, total - out.frames);
    out.values.insert(out.values.end(), part.values.begin(),
                      part.values.begin() + static_cast<std::ptrdiff_t>(take * out.dims));
    out.frames += take;
    if (out.frames == total) break;
  }
  return out;
}

GridCalibration calibrate_grid(std::span<const Recording> preprocessed, const FeatureConfig& cfg,
                               std::size_t windows_per_scale) {
  std::vector<double> global;
  std::vector<double> meso;
  std::vector<double> fine;
  const SparsifyOptions opts{cfg.landscape.quantile, std::nullopt};
  for (const Recording& rec : preprocessed) {
    for (const Recording& chunk : chunk_or_loop(rec, cfg.preprocess.chunk_seconds, ChunkMode::kInference)) {
      const Recording global_stream = decimate_polyphase(chunk, cfg.preprocess.target_rate_global);
      for (const ScaleConfig& scale : cfg.scales) {
        const Recording& src = is_global(scale.name) ? global_stream : chunk;
        if (src.samples.size() <= static_cast<std::size_t>((scale.dim - 1) * scale.delay_samples())) continue;
        const EmbeddedTrajectory traj = delay_embed(src, scale);
        const SweepGeometry geo = sweep_geometry(traj, {scale, 1});
        if (geo.windows == 0) continue;
        const PointCloudView cloud{traj.coords, traj.size(), static_cast<std::size_t>(traj.dim)};
        const std::size_t samples = std::min(windows_per_scale, geo.windows);
        for (std::size_t i = 0; i < samples; ++i) {
          const std::size_t w = samples == 1 ? 0 : i * (geo.windows - 1) / (samples - 1);
          const std::size_t first = w * geo.hop_points;
          const PointCloudView window{cloud.coords.subspan(first * cloud.dim, geo.window_points * cloud.dim),
                                      geo.window_points, cloud.dim};
          const double r = build_sparse_edges(window, opts).clip_radius;
          (is_global(scale.name) ? global : scale.name == ScaleName::kMeso ? meso : fine).push_back(r);
        }
      }
    }
  }
  auto median_or_one = [](std::vector<double> v) {
    if (v.empty()) return 1.0;
    const double m = quantile_linear(std::move(v), 0.5);
    return m > 0.0 ? m : 1.0;
  };
  return {median_or_one(std::move(global)), median_or_one(std::move(meso)), median_or_one(std::move(fine))};
}

}  // namespace topseg
