#include "topseg/embed.hpp"

#include "topseg/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace topseg {

std::string_view to_string(ScaleName name) {
  switch (name) {
    case ScaleName::kGlobal2: return "global2";
    case ScaleName::kGlobal4: return "global4";
    case ScaleName::kGlobal8: return "global8";
    case ScaleName::kMeso: return "meso";
    case ScaleName::kFine: return "fine";
  }
  return "unknown";
}

ScaleName scale_from_string(std::string_view name) {
  for (ScaleName s : {ScaleName::kGlobal2, ScaleName::kGlobal4, ScaleName::kGlobal8,
                      ScaleName::kMeso, ScaleName::kFine}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown scale name: " + std::string(name));
}

bool is_global(ScaleName name) {
  return name == ScaleName::kGlobal2 || name == ScaleName::kGlobal4 || name == ScaleName::kGlobal8;
}

int ScaleConfig::delay_samples() const {
  return static_cast<int>(std::lround(tau * stream_rate));
}

std::size_t ScaleConfig::window_points() const {
  return static_cast<std::size_t>(std::llround(window_multiplier * window_span() * stream_rate));
}

void ScaleConfig::validate() const {
  const std::string name_str(to_string(name));
  if (!(stream_rate > 0.0) || dim < 1 || !(tau > 0.0)) {
    throw ConfigError("scale " + name_str + ": stream_rate, tau and dim must be positive");
  }
  if (std::abs(tau * stream_rate - delay_samples()) > 1e-6 || delay_samples() < 1) {
    throw ConfigError("scale " + name_str + ": tau must be a whole number of samples");
  }
  if (!(window_multiplier > 0.0)) {
    throw ConfigError("scale " + name_str + ": window multiplier must be positive");
  }
}

std::vector<ScaleConfig> default_scales() {
  return {
      {ScaleName::kGlobal2, 60.0, 0.100, 21, 2.0},
      {ScaleName::kGlobal4, 60.0, 0.200, 21, 2.0},
      {ScaleName::kGlobal8, 60.0, 0.200, 41, 2.0},
      {ScaleName::kMeso, 600.0, 0.025, 21, 2.0},
      {ScaleName::kFine, 600.0, 0.010, 11, 2.0},
  };
}

EmbeddedTrajectory delay_embed(const Recording& signal, const ScaleConfig& cfg) {
  cfg.validate();
  if (std::abs(signal.sample_rate - cfg.stream_rate) > 1e-9) {
    throw ConfigError("delay_embed: signal rate does not match scale " +
                      std::string(to_string(cfg.name)));
  }
  const auto lag = static_cast<std::size_t>(cfg.delay_samples());
  const auto dim = static_cast<std::size_t>(cfg.dim);
  const std::size_t span = (dim - 1) * lag;
  const std::size_t n = signal.samples.size();
  if (n <= span) {
    throw InsufficientLengthError("delay_embed: signal of " + std::to_string(n) +
                                  " samples too short for scale " +
                                  std::string(to_string(cfg.name)));
  }
  EmbeddedTrajectory t;
  t.dim = cfg.dim;
  t.delay_samples = cfg.delay_samples();
  t.stream_rate = cfg.stream_rate;
  t.origin_time = 0.0;
  const std::size_t points = n - span;
  t.coords.resize(points * dim);
  for (std::size_t i = 0; i < points; ++i) {
    for (std::size_t k = 0; k < dim; ++k) t.coords[i * dim + k] = signal.samples[i + k * lag];
  }
  return t;
}

std::vector<double> average_mutual_information(const Recording& signal, int max_lag) {
  constexpr int kBins = 16;
  const auto& s = signal.samples;
  if (max_lag < 1 || s.size() < 4 * static_cast<std::size_t>(max_lag)) {
    throw InsufficientLengthError("average_mutual_information: need length >= 4 * max_lag");
  }
  const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / kBins;
  std::vector<int> bin(s.size(), 0);
  if (width > 0.0) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      bin[i] = std::min(kBins - 1, static_cast<int>((s[i] - lo) / width));
    }
  }

  std::vector<double> ami;
  ami.reserve(static_cast<std::size_t>(max_lag));
  for (int lag = 1; lag <= max_lag; ++lag) {
    const std::size_t n = s.size() - static_cast<std::size_t>(lag);
    std::array<double, kBins * kBins> joint{};
    std::array<double, kBins> pa{};
    std::array<double, kBins> pb{};
    for (std::size_t i = 0; i < n; ++i) {
      const int a = bin[i];
      const int b = bin[i + static_cast<std::size_t>(lag)];
      joint[static_cast<std::size_t>(a * kBins + b)] += 1.0;
      pa[static_cast<std::size_t>(a)] += 1.0;
      pb[static_cast<std::size_t>(b)] += 1.0;
    }
    double mi = 0.0;
    for (int a = 0; a < kBins; ++a) {
      for (int b = 0; b < kBins; ++b) {
        const double pj = joint[static_cast<std::size_t>(a * kBins + b)] / n;
        if (pj <= 0.0) continue;
        mi += pj * std::log(pj / ((pa[static_cast<std::size_t>(a)] / n) *
                                  (pb[static_cast<std::size_t>(b)] / n)));
      }
    }
    ami.push_back(mi);
  }
  return ami;
}

}  // namespace topseg
