#pragma once

#include "topseg/signal.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace topseg {

enum class ScaleName { kGlobal2, kGlobal4, kGlobal8, kMeso, kFine };

std::string_view to_string(ScaleName name);
ScaleName scale_from_string(std::string_view name);
bool is_global(ScaleName name);

// Delay-embedding parameters of one scale. tau is in seconds and must be a
// whole number of samples at stream_rate.
struct ScaleConfig {
  ScaleName name{ScaleName::kFine};
  double stream_rate{600.0};
  double tau{0.010};
  int dim{11};
  double window_multiplier{2.0};

  int delay_samples() const;
  // W = (dim - 1) * tau.
  double window_span() const { return (dim - 1) * tau; }
  // Sliding-window length L = m * W in points of the embedded trajectory.
  std::size_t window_points() const;

  void validate() const;
};

// Global-2s, Global-4s, Global-8s, Meso, Fine in that order.
std::vector<ScaleConfig> default_scales();

// Points Phi(t) = (s[t], s[t+L], ..., s[t+(d-1)L]) stored row-major.
struct EmbeddedTrajectory {
  std::vector<double> coords;
  int dim{1};
  int delay_samples{1};
  double stream_rate{1.0};
  double origin_time{0.0};

  std::size_t size() const { return dim > 0 ? coords.size() / static_cast<std::size_t>(dim) : 0; }
  std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

EmbeddedTrajectory delay_embed(const Recording& signal, const ScaleConfig& cfg);

// Average mutual information (nats) for lags 1..max_lag, 16 equal-width
// bins. Diagnostic only; default scales are fixed.
std::vector<double> average_mutual_information(const Recording& signal, int max_lag);

}  // namespace topseg
