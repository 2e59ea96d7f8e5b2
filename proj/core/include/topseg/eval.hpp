#pragma once

#include "topseg/labels.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace topseg {

// Tolerant frame counts of one class. Predicted frames give precision
// counts, truth frames give recall counts.
struct ClassCounts {
  std::uint64_t tp_pred{0};
  std::uint64_t fp{0};
  std::uint64_t tp_truth{0};
  std::uint64_t fn{0};

  double precision() const;
  double recall() const;
  // Harmonic mean of precision and recall; 1 when the class is absent
  // from both sequences.
  double f1() const;
  ClassCounts& operator+=(const ClassCounts& other);
};

using ScoreCounts = std::array<ClassCounts, kNumStates>;

// Frames within +-tolerance, counted as floor(tol * rate) frames.
int tolerance_frames(double tolerance_seconds, double frame_rate);

// A predicted frame of class c is a hit when a truth frame of class c lies
// within the tolerance, and symmetrically for truth frames.
ScoreCounts score(const LabelSequence& pred, const LabelSequence& truth, double tolerance_seconds);

struct EvalReport {
  double macro_f1{0.0};
  std::array<double, kNumStates> per_class_f1{};
  std::array<double, kNumStates> per_class_precision{};
  std::array<double, kNumStates> per_class_recall{};
  double boundary_tolerance{0.060};
  std::size_t n_recordings{0};
  ScoreCounts counts{};
};

EvalReport make_report(const ScoreCounts& counts, double tolerance_seconds, std::size_t n_recordings = 1);

// Pools counts per class across recordings, then macro-averages.
EvalReport aggregate(std::span<const ScoreCounts> per_recording, double tolerance_seconds);

// Onset diagnostic: run starts of each class matched greedily one-to-one
// (closest first) within the tolerance.
struct OnsetCounts {
  std::uint64_t tp{0};
  std::uint64_t fp{0};
  std::uint64_t fn{0};

  double f1() const;
};

std::array<OnsetCounts, kNumStates> score_onsets(const LabelSequence& pred, const LabelSequence& truth,
                                                 double tolerance_seconds);

struct ManifestEntry {
  std::string recording_id;
  std::string subject_id;
};

// Whitespace-separated `recording_id subject_id` lines; '#' starts a comment.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

std::vector<std::string> subjects_of(std::span<const ManifestEntry> entries);

// Keeps every recording of ceil(pct * n_subjects) uniformly chosen subjects,
// in manifest order. Throws ConfigError unless 0 < pct <= 1.
std::vector<ManifestEntry> subsample_subjects(std::span<const ManifestEntry> entries, double pct,
                                              std::uint64_t seed);

// key=value lines, sorted by key, fixed 6-decimal fractions.
std::map<std::string, std::string> report_metrics(const EvalReport& report);
void write_metrics(const std::filesystem::path& path, const std::map<std::string, std::string>& metrics);
std::string format_report(const EvalReport& report);

}  // namespace topseg
