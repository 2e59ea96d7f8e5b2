#include "topseg/labels.hpp"

#include "topseg/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

namespace topseg {

std::string_view to_string(HeartState s) {
  switch (s) {
    case HeartState::kS1: return "S1";
    case HeartState::kSystole: return "systole";
    case HeartState::kS2: return "S2";
    case HeartState::kDiastole: return "diastole";
  }
  return "?";
}

HeartState parse_state(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "s1" || lower == "1") return HeartState::kS1;
  if (lower == "systole" || lower == "2") return HeartState::kSystole;
  if (lower == "s2" || lower == "3") return HeartState::kS2;
  if (lower == "diastole" || lower == "4") return HeartState::kDiastole;
  throw LabelError("unknown heart state: " + std::string(text));
}

std::vector<LabelInterval> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LabelError("cannot open label file " + path.string());
  std::vector<LabelInterval> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    LabelInterval iv;
    std::string state;
    if (!(ls >> iv.start)) continue;  // blank line
    if (!(ls >> iv.end >> state) || !(iv.end >= iv.start)) {
      throw LabelError(path.string() + ":" + std::to_string(lineno) + ": expected `start end state`");
    }
    iv.state = parse_state(state);
    out.push_back(iv);
  }
  return out;
}

void write_label_file(const std::filesystem::path& path, const std::vector<LabelInterval>& intervals) {
  std::ofstream out(path);
  if (!out) throw LabelError("cannot write label file " + path.string());
  out.setf(std::ios::fixed);
  out.precision(6);
  for (const auto& iv : intervals) out << iv.start << ' ' << iv.end << ' ' << to_string(iv.state) << '\n';
}

LabelSequence labels_from_intervals(const std::vector<LabelInterval>& intervals, double frame_rate,
                                    std::size_t frames) {
  std::vector<LabelInterval> sorted = intervals;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const LabelInterval& a, const LabelInterval& b) { return a.start < b.start; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k].start < sorted[k - 1].end - 1e-9) {
      throw LabelError("overlapping label intervals at " + std::to_string(sorted[k].start) + " s");
    }
  }
  LabelSequence seq;
  seq.frame_rate = frame_rate;
  seq.states.resize(frames);
  HeartState previous = HeartState::kDiastole;
  std::size_t k = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double center = (static_cast<double>(t) + 0.5) / frame_rate;
    while (k < sorted.size() && sorted[k].end <= center) ++k;
    if (k < sorted.size() && sorted[k].start <= center) previous = sorted[k].state;
    seq.states[t] = previous;
  }
  return seq;
}

std::vector<LabelInterval> intervals_from_labels(const LabelSequence& labels) {
  std::vector<LabelInterval> out;
  const std::size_t n = labels.states.size();
  std::size_t run = 0;
  for (std::size_t t = 1; t <= n; ++t) {
    if (t == n || labels.states[t] != labels.states[run]) {
      out.push_back({static_cast<double>(run) / labels.frame_rate, static_cast<double>(t) / labels.frame_rate,
                     labels.states[run]});
      run = t;
    }
  }
  return out;
}

}  // namespace topseg
