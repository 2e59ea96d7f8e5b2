#include "topseg/eval.hpp"

#include "rng.hpp"
#include "topseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

namespace topseg {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

// hits[t] = 1 when frame t of `from` has a same-class frame of `other` within k.
void tolerant_counts(const LabelSequence& from, const LabelSequence& other, int k, ScoreCounts& counts,
                     bool as_prediction) {
  const std::size_t n = from.size();
  for (std::size_t c = 0; c < kNumStates; ++c) {
    std::vector<std::uint32_t> prefix(n + 1, 0);
    for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + (index_of(other.states[t]) == c ? 1u : 0u);
    for (std::size_t t = 0; t < n; ++t) {
      if (index_of(from.states[t]) != c) continue;
      const std::size_t lo = t >= static_cast<std::size_t>(k) ? t - static_cast<std::size_t>(k) : 0;
      const std::size_t hi = std::min(n, t + static_cast<std::size_t>(k) + 1);
      const bool hit = prefix[hi] > prefix[lo];
      if (as_prediction) {
        (hit ? counts[c].tp_pred : counts[c].fp) += 1;
      } else {
        (hit ? counts[c].tp_truth : counts[c].fn) += 1;
      }
    }
  }
}

}  // namespace

double ClassCounts::precision() const { return ratio(tp_pred, tp_pred + fp); }

double ClassCounts::recall() const { return ratio(tp_truth, tp_truth + fn); }

double ClassCounts::f1() const {
  if (tp_pred + fp == 0 && tp_truth + fn == 0) return 1.0;
  const double p = precision();
  const double r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& other) {
  tp_pred += other.tp_pred;
  fp += other.fp;
  tp_truth += other.tp_truth;
  fn += other.fn;
  return *this;
}

int tolerance_frames(double tolerance_seconds, double frame_rate) {
  if (!(tolerance_seconds >= 0.0)) throw EvaluationError("tolerance must be nonnegative");
  return static_cast<int>(std::floor(tolerance_seconds * frame_rate + 1e-9));
}

ScoreCounts score(const LabelSequence& pred, const LabelSequence& truth, double tolerance_seconds) {
  if (pred.size() != truth.size()) {
    throw EvaluationError("score: prediction has " + std::to_string(pred.size()) + " frames, truth has " +
                          std::to_string(truth.size()));
  }
  if (pred.frame_rate != truth.frame_rate) throw EvaluationError("score: frame rates differ");
  const int k = tolerance_frames(tolerance_seconds, truth.frame_rate);
  ScoreCounts counts{};
  tolerant_counts(pred, truth, k, counts, true);
  tolerant_counts(truth, pred, k, counts, false);
  return counts;
}

EvalReport make_report(const ScoreCounts& counts, double tolerance_seconds, std::size_t n_recordings) {
  EvalReport report;
  report.counts = counts;
  report.boundary_tolerance = tolerance_seconds;
  report.n_recordings = n_recordings;
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumStates; ++c) {
    report.per_class_f1[c] = counts[c].f1();
    report.per_class_precision[c] = counts[c].precision();
    report.per_class_recall[c] = counts[c].recall();
    sum += report.per_class_f1[c];
  }
  report.macro_f1 = sum / static_cast<double>(kNumStates);
  return report;
}

EvalReport aggregate(std::span<const ScoreCounts> per_recording, double tolerance_seconds) {
  if (per_recording.empty()) throw EvaluationError("aggregate: no recordings");
  ScoreCounts pooled{};
  for (const auto& counts : per_recording) {
    for (std::size_t c = 0; c < kNumStates; ++c) pooled[c] += counts[c];
  }
  return make_report(pooled, tolerance_seconds, per_recording.size());
}

double OnsetCounts::f1() const {
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::array<OnsetCounts, kNumStates> score_onsets(const LabelSequence& pred, const LabelSequence& truth,
                                                 double tolerance_seconds) {
  if (pred.size() != truth.size() || pred.frame_rate != truth.frame_rate) {
    throw EvaluationError("score_onsets: sequences differ in length or rate");
  }
  const long k = tolerance_frames(tolerance_seconds, truth.frame_rate);
  auto onsets = [](const LabelSequence& seq, std::size_t c) {
    std::vector<long> out;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (index_of(seq.states[t]) == c && (t == 0 || seq.states[t - 1] != seq.states[t])) {
        out.push_back(static_cast<long>(t));
      }
    }
    return out;
  };
  std::array<OnsetCounts, kNumStates> out{};
  for (std::size_t c = 0; c < kNumStates; ++c) {
    const auto p = onsets(pred, c);
    const auto g = onsets(truth, c);
    struct Candidate {
      long distance;
      std::size_t i;
      std::size_t j;
    };
    std::vector<Candidate> cand;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        const long d = std::abs(p[i] - g[j]);
        if (d <= k) cand.push_back({d, i, j});
      }
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.distance, a.i, a.j) < std::tie(b.distance, b.i, b.j);
    });
    std::vector<char> used_p(p.size(), 0);
    std::vector<char> used_g(g.size(), 0);
    for (const auto& m : cand) {
      if (used_p[m.i] || used_g[m.j]) continue;
      used_p[m.i] = used_g[m.j] = 1;
      ++out[c].tp;
    }
    out[c].fp = p.size() - out[c].tp;
    out[c].fn = g.size() - out[c].tp;
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest not found: " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    ManifestEntry e;
    if (!(fields >> e.recording_id)) continue;
    if (!(fields >> e.subject_id)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected `recording_id subject_id`");
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << "# recording_id subject_id\n";
  for (const auto& e : entries) out << e.recording_id << ' ' << e.subject_id << '\n';
}

std::vector<std::string> subjects_of(std::span<const ManifestEntry> entries) {
  std::vector<std::string> subjects;
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (seen.insert(e.subject_id).second) subjects.push_back(e.subject_id);
  }
  return subjects;
}

std::vector<ManifestEntry> subsample_subjects(std::span<const ManifestEntry> entries, double pct,
                                              std::uint64_t seed) {
  if (!(pct > 0.0 && pct <= 1.0)) throw ConfigError("budget fraction must lie in (0, 1]");
  std::vector<std::string> subjects = subjects_of(entries);
  const auto keep = static_cast<std::size_t>(std::ceil(pct * static_cast<double>(subjects.size()) - 1e-9));
  detail::Rng rng(seed);
  rng.shuffle(subjects);
  const std::set<std::string> chosen(subjects.begin(),
                                     subjects.begin() + static_cast<std::ptrdiff_t>(std::min(keep, subjects.size())));
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (chosen.count(e.subject_id)) out.push_back(e);
  }
  return out;
}

std::map<std::string, std::string> report_metrics(const EvalReport& report) {
  std::map<std::string, std::string> m;
  m["macro_f1"] = fixed6(report.macro_f1);
  m["tolerance_s"] = fixed6(report.boundary_tolerance);
  m["n_recordings"] = std::to_string(report.n_recordings);
  for (std::size_t c = 0; c < kNumStates; ++c) {
    const std::string name(to_string(kAllStates[c]));
    m["f1." + name] = fixed6(report.per_class_f1[c]);
    m["precision." + name] = fixed6(report.per_class_precision[c]);
    m["recall." + name] = fixed6(report.per_class_recall[c]);
  }
  return m;
}

void write_metrics(const std::filesystem::path& path, const std::map<std::string, std::string>& metrics) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write metrics: " + path.string());
  for (const auto& [k, v] : metrics) out << k << '=' << v << '\n';
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os << "recordings: " << report.n_recordings << "  tolerance: " << fixed6(report.boundary_tolerance) << " s\n";
  os << std::left << std::setw(10) << "class" << std::setw(12) << "precision" << std::setw(12) << "recall"
     << "f1\n";
  for (std::size_t c = 0; c < kNumStates; ++c) {
    os << std::setw(10) << to_string(kAllStates[c]) << std::setw(12) << fixed6(report.per_class_precision[c])
       << std::setw(12) << fixed6(report.per_class_recall[c]) << fixed6(report.per_class_f1[c]) << '\n';
  }
  os << "macro-F1: " << fixed6(report.macro_f1) << '\n';
  return os.str();
}

}  // namespace topseg
