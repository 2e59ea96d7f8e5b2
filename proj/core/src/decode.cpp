#include "topseg/error.hpp"
#include "topseg/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace topseg {

std::array<int, kNumStates> DurationConfig::frames(double frame_rate) const {
  std::array<int, kNumStates> out{};
  for (std::size_t s = 0; s < kNumStates; ++s) {
    out[s] = std::max(1, static_cast<int>(std::ceil(minimum[s] * frame_rate - 1e-9)));
  }
  return out;
}

void DurationConfig::validate() const {
  for (double m : minimum) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("decode: minimum durations must be finite and >= 0");
  }
}

LabelSequence argmax_decode(const PosteriorSequence& p) {
  LabelSequence out;
  out.frame_rate = p.frame_rate;
  out.states.resize(p.frames);
  for (std::size_t t = 0; t < p.frames; ++t) {
    const auto row = p.row(t);
    out.states[t] = kAllStates[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())];
  }
  return out;
}

DecodeResult constrained_decode(const PosteriorSequence& p, const DurationConfig& durations) {
  durations.validate();
  DecodeResult result;
  const std::array<int, kNumStates> min_frames = durations.frames(p.frame_rate);
  const int cycle = std::accumulate(min_frames.begin(), min_frames.end(), 0);
  const std::size_t n = p.frames;
  if (n < static_cast<std::size_t>(cycle)) {
    result.labels = argmax_decode(p);
    result.fallback = true;
    result.warning = "sequence of " + std::to_string(n) + " frames is shorter than one minimum cycle (" +
                     std::to_string(cycle) + " frames); using framewise argmax";
    return result;
  }

  // Lattice node (s, c): in state s for c frames, with c capped at the
  // minimum d_s (c == d_s means the minimum has been met).
  std::array<std::size_t, kNumStates> offset{};
  std::size_t nodes = 0;
  for (std::size_t s = 0; s < kNumStates; ++s) {
    offset[s] = nodes;
    nodes += static_cast<std::size_t>(min_frames[s]);
  }
  auto node = [&](std::size_t s, int c) { return offset[s] + static_cast<std::size_t>(c - 1); };
  constexpr double kNeg = -std::numeric_limits<double>::infinity();
  auto emit = [&](std::size_t t, std::size_t s) { return std::log(std::max(p.row(t)[s], 1e-12)); };

  std::vector<double> score(nodes, kNeg);
  std::vector<double> next(nodes, kNeg);
  std::vector<std::uint32_t> back(n * nodes, 0);
  for (std::size_t s = 0; s < kNumStates; ++s) score[node(s, min_frames[s])] = emit(0, s);

  for (std::size_t t = 1; t < n; ++t) {
    std::fill(next.begin(), next.end(), kNeg);
    std::uint32_t* bp = back.data() + t * nodes;
    for (std::size_t s = 0; s < kNumStates; ++s) {
      const int d = min_frames[s];
      const std::size_t prev_state = (s + kNumStates - 1) % kNumStates;
      const double e = emit(t, s);
      // Entering s from a completed predecessor run.
      {
        const std::size_t from = node(prev_state, min_frames[prev_state]);
        const std::size_t to = node(s, 1 < d ? 1 : d);
        const double v = score[from] + e;
        if (v > next[to]) {
          next[to] = v;
          bp[to] = static_cast<std::uint32_t>(from);
        }
      }
      // Staying in s.
      for (int c = 1; c <= d; ++c) {
        const std::size_t from = node(s, c);
        if (score[from] == kNeg) continue;
        const std::size_t to = node(s, std::min(c + 1, d));
        const double v = score[from] + e;
        if (v > next[to]) {
          next[to] = v;
          bp[to] = static_cast<std::uint32_t>(from);
        }
      }
    }
    std::swap(score, next);
  }

  std::size_t best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
  std::vector<std::size_t> path(n);
  for (std::size_t t = n; t-- > 0;) {
    path[t] = best;
    if (t > 0) best = back[t * nodes + best];
  }
  result.labels.frame_rate = p.frame_rate;
  result.labels.states.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t s = kNumStates - 1;
    while (offset[s] > path[t]) --s;
    result.labels.states[t] = kAllStates[s];
  }
  return result;
}

}  // namespace topseg
