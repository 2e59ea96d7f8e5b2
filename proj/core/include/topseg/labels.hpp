#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace topseg {

// Cyclic segmentation alphabet, in posterior column order.
enum class HeartState : std::uint8_t { kS1 = 0, kSystole = 1, kS2 = 2, kDiastole = 3 };

inline constexpr std::size_t kNumStates = 4;
inline constexpr std::array<HeartState, kNumStates> kAllStates = {
    HeartState::kS1, HeartState::kSystole, HeartState::kS2, HeartState::kDiastole};

constexpr std::size_t index_of(HeartState s) { return static_cast<std::size_t>(s); }
constexpr HeartState next_state(HeartState s) {
  return static_cast<HeartState>((index_of(s) + 1) % kNumStates);
}

std::string_view to_string(HeartState s);
// Accepts S1, systole, S2, diastole (any case) or the codes 1-4.
HeartState parse_state(std::string_view text);

struct LabelInterval {
  double start{0.0};
  double end{0.0};
  HeartState state{HeartState::kDiastole};
};

struct LabelSequence {
  std::vector<HeartState> states;
  double frame_rate{60.0};

  std::size_t size() const { return states.size(); }
};

// `start_seconds end_seconds state` per line; '#' starts a comment.
std::vector<LabelInterval> read_label_file(const std::filesystem::path& path);
void write_label_file(const std::filesystem::path& path, const std::vector<LabelInterval>& intervals);

// Frame t takes the state of the interval containing (t + 0.5) / frame_rate.
// Gap frames keep the previous state; a leading gap is diastole. Throws
// LabelError on overlapping intervals.
LabelSequence labels_from_intervals(const std::vector<LabelInterval>& intervals, double frame_rate,
                                    std::size_t frames);

// Run-length intervals [t0 / rate, t1 / rate).
std::vector<LabelInterval> intervals_from_labels(const LabelSequence& labels);

}  // namespace topseg
