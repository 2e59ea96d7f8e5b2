#include "binary_io.hpp"
#include "topseg/error.hpp"
#include "topseg/features.hpp"

#include <json.hpp>

#include <fstream>

namespace topseg {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'T', 'S', 'E', 'G'};

json scales_json(const std::vector<ScaleConfig>& scales) {
  json arr = json::array();
  for (const auto& s : scales) {
    arr.push_back({{"name", std::string(to_string(s.name))},
                   {"stream_rate", s.stream_rate},
                   {"tau", s.tau},
                   {"dim", s.dim},
                   {"m", s.window_multiplier}});
  }
  return arr;
}

json metadata(const FrameFeatureMatrix& fm, const FeatureConfig& cfg) {
  return {{"recording_id", fm.recording_id},
          {"frames", fm.frames},
          {"dims", fm.dims},
          {"frame_rate", fm.frame_rate},
          {"layers", cfg.landscape.layers},
          {"grid_size", cfg.landscape.grid_size},
          {"quantile", cfg.landscape.quantile},
          {"calibration",
           {{"global", cfg.calibration.global}, {"meso", cfg.calibration.meso}, {"fine", cfg.calibration.fine}}},
          {"scales", scales_json(cfg.scales)},
          {"preprocess",
           {{"band_low", cfg.preprocess.band_low},
            {"band_high", cfg.preprocess.band_high},
            {"filter_order", cfg.preprocess.filter_order},
            {"target_rate_fine", cfg.preprocess.target_rate_fine},
            {"target_rate_global", cfg.preprocess.target_rate_global},
            {"chunk_seconds", cfg.preprocess.chunk_seconds}}}};
}

}  // namespace

void cache_write(const FrameFeatureMatrix& fm, const FeatureConfig& cfg, const std::filesystem::path& path) {
  if (fm.values.size() != fm.frames * fm.dims) throw DataError("cache_write: matrix shape mismatch");
  const std::string meta = metadata(fm, cfg).dump();
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cache_write: cannot open " + tmp.string());
    out.write(kMagic, 4);
    detail::put_u32(out, kCacheVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(meta.size()));
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    detail::put_array(out, fm.values);
    if (!out) throw DataError("cache_write: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

FrameFeatureMatrix cache_read(const std::filesystem::path& path, const FeatureConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheInvalidError("cache missing: " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint32_t meta_len = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw CacheInvalidError("bad cache magic: " + path.string());
  }
  if (!detail::get_u32(in, version) || version != kCacheVersion) {
    throw CacheInvalidError("cache version mismatch: " + path.string());
  }
  if (!detail::get_u32(in, meta_len) || meta_len > (1u << 24)) {
    throw CacheInvalidError("bad cache header: " + path.string());
  }
  std::string meta_text(meta_len, '\0');
  if (!in.read(meta_text.data(), meta_len)) throw CacheInvalidError("truncated cache header: " + path.string());

  json meta;
  FrameFeatureMatrix fm;
  try {
    meta = json::parse(meta_text);
    fm.recording_id = meta.at("recording_id").get<std::string>();
    fm.frames = meta.at("frames").get<std::size_t>();
    fm.dims = meta.at("dims").get<std::size_t>();
    fm.frame_rate = meta.at("frame_rate").get<double>();
  } catch (const json::exception& e) {
    throw CacheInvalidError("unreadable cache metadata in " + path.string() + ": " + e.what());
  }

  if (expected != nullptr) {
    FrameFeatureMatrix probe;
    probe.recording_id = fm.recording_id;
    probe.frames = fm.frames;
    probe.dims = expected->dims();
    probe.frame_rate = expected->frame_rate;
    if (metadata(probe, *expected) != meta) {
      throw CacheInvalidError("cache configuration differs from the current one: " + path.string());
    }
  }
  if (fm.frames > (1u << 28) / std::max<std::size_t>(1, fm.dims)) {
    throw CacheInvalidError("implausible cache shape: " + path.string());
  }
  if (!detail::get_array(in, fm.values, fm.frames * fm.dims)) {
    throw CacheInvalidError("truncated cache payload: " + path.string());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CacheInvalidError("trailing bytes in cache: " + path.string());
  }
  return fm;
}

void write_calibration(const std::filesystem::path& path, const GridCalibration& cal) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write calibration " + path.string());
  const json j = {{"global", cal.global}, {"meso", cal.meso}, {"fine", cal.fine}};
  out << j.dump(2) << '\n';
}

GridCalibration read_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read calibration " + path.string());
  try {
    const json j = json::parse(in);
    return {j.at("global").get<double>(), j.at("meso").get<double>(), j.at("fine").get<double>()};
  } catch (const json::exception& e) {
    throw DataError("bad calibration file " + path.string() + ": " + e.what());
  }
}

}  // namespace topseg
