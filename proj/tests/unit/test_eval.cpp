#include "test_util.hpp"
#include "topseg/error.hpp"
#include "topseg/eval.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

namespace topseg {
namespace {

LabelSequence seq(std::initializer_list<std::pair<HeartState, int>> runs, double rate = 60.0) {
  LabelSequence s;
  s.frame_rate = rate;
  for (const auto& [state, n] : runs) s.states.insert(s.states.end(), static_cast<std::size_t>(n), state);
  return s;
}

LabelSequence cyclic(std::size_t frames, std::mt19937_64& rng, double rate = 60.0) {
  std::uniform_int_distribution<int> len(3, 20);
  LabelSequence s;
  s.frame_rate = rate;
  HeartState state = kAllStates[static_cast<std::size_t>(len(rng) % 4)];
  while (s.size() < frames) {
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(len(rng)), frames - s.size());
    s.states.insert(s.states.end(), n, state);
    state = next_state(state);
  }
  return s;
}

// Independent count of tolerant matches, by direct scanning.
ScoreCounts naive_counts(const LabelSequence& pred, const LabelSequence& truth, int k) {
  ScoreCounts out{};
  const auto n = static_cast<int>(pred.size());
  auto near = [&](const LabelSequence& other, int t, HeartState s) {
    for (int u = std::max(0, t - k); u <= std::min(n - 1, t + k); ++u) {
      if (other.states[static_cast<std::size_t>(u)] == s) return true;
    }
    return false;
  };
  for (int t = 0; t < n; ++t) {
    const HeartState p = pred.states[static_cast<std::size_t>(t)];
    const HeartState g = truth.states[static_cast<std::size_t>(t)];
    (near(truth, t, p) ? out[index_of(p)].tp_pred : out[index_of(p)].fp) += 1;
    (near(pred, t, g) ? out[index_of(g)].tp_truth : out[index_of(g)].fn) += 1;
  }
  return out;
}

TEST(Tolerance, Frames) {
  EXPECT_EQ(tolerance_frames(0.060, 60.0), 3);
  EXPECT_EQ(tolerance_frames(0.0, 60.0), 0);
  EXPECT_EQ(tolerance_frames(0.05, 60.0), 3);
  EXPECT_EQ(tolerance_frames(0.1, 10.0), 1);
  EXPECT_THROW(tolerance_frames(-0.01, 60.0), EvaluationError);
}

TEST(Score, IdentityIsPerfect) {
  std::mt19937_64 rng(1);
  const auto truth = cyclic(600, rng);
  const auto r = make_report(score(truth, truth, 0.060), 0.060);
  EXPECT_EQ(r.macro_f1, 1.0);
  for (double f : r.per_class_f1) EXPECT_EQ(f, 1.0);
}

TEST(Score, OneFrameShiftIsAbsorbed) {
  std::mt19937_64 rng(2);
  const auto truth = cyclic(600, rng);
  LabelSequence pred = truth;
  pred.states.insert(pred.states.begin(), pred.states.front());
  pred.states.pop_back();
  EXPECT_EQ(make_report(score(pred, truth, 0.060), 0.060).macro_f1, 1.0);
  EXPECT_LT(make_report(score(pred, truth, 0.0), 0.0).macro_f1, 1.0);
}

TEST(Score, AllDiastoleToy) {
  const auto truth = seq({{HeartState::kS1, 3}, {HeartState::kSystole, 3}, {HeartState::kS2, 3}, {HeartState::kDiastole, 3}});
  const auto pred = seq({{HeartState::kDiastole, 12}});
  // Zero tolerance: diastole P = 3/12, R = 1, F1 = 0.4; other classes 0.
  const auto exact = make_report(score(pred, truth, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(exact.per_class_f1[3], 0.4);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(exact.per_class_f1[c], 0.0);
  EXPECT_DOUBLE_EQ(exact.macro_f1, 0.1);
  // 60 ms = 3 frames: predicted frames 6..11 see truth diastole at 9..11,
  // so P = 6/12 and F1 = 2/3.
  const auto tol = make_report(score(pred, truth, 0.060), 0.060);
  EXPECT_DOUBLE_EQ(tol.per_class_precision[3], 0.5);
  EXPECT_DOUBLE_EQ(tol.per_class_recall[3], 1.0);
  EXPECT_NEAR(tol.per_class_f1[3], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(tol.macro_f1, 1.0 / 6.0, 1e-15);
}

TEST(Score, MatchesNaiveScan) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto truth = cyclic(120, rng);
    const auto pred = cyclic(120, rng);
    for (double tol : {0.0, 0.02, 0.06, 0.2}) {
      const auto got = score(pred, truth, tol);
      const auto want = naive_counts(pred, truth, tolerance_frames(tol, 60.0));
      for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_EQ(got[c].tp_pred, want[c].tp_pred);
        EXPECT_EQ(got[c].fp, want[c].fp);
        EXPECT_EQ(got[c].tp_truth, want[c].tp_truth);
        EXPECT_EQ(got[c].fn, want[c].fn);
      }
    }
  }
}

TEST(Score, InvariantsOnRandomSequences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto truth = cyclic(300, rng);
    const auto pred = cyclic(300, rng);
    const auto r = make_report(score(pred, truth, 0.06), 0.06);
    double mean = 0.0;
    for (double f : r.per_class_f1) {
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      mean += f;
    }
    EXPECT_EQ(r.macro_f1, mean / 4.0);
    // Swapping roles swaps precision and recall, leaving F1 unchanged.
    const auto swapped = make_report(score(truth, pred, 0.06), 0.06);
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_DOUBLE_EQ(swapped.per_class_precision[c], r.per_class_recall[c]);
      EXPECT_NEAR(swapped.per_class_f1[c], r.per_class_f1[c], 1e-15);
    }
    // Widening the tolerance never lowers any score.
    double prev = -1.0;
    for (double tol : {0.0, 0.02, 0.04, 0.06, 0.1}) {
      const double m = make_report(score(pred, truth, tol), tol).macro_f1;
      EXPECT_GE(m, prev);
      prev = m;
    }
  }
}

TEST(Score, LabelPermutationSymmetry) {
  std::mt19937_64 rng(5);
  const auto truth = cyclic(300, rng);
  const auto pred = cyclic(300, rng);
  const std::array<std::size_t, 4> perm{2, 0, 3, 1};
  auto relabel = [&](LabelSequence s) {
    for (auto& v : s.states) v = kAllStates[perm[index_of(v)]];
    return s;
  };
  const auto a = make_report(score(pred, truth, 0.06), 0.06);
  const auto b = make_report(score(relabel(pred), relabel(truth), 0.06), 0.06);
  EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-15);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(a.per_class_f1[c], b.per_class_f1[perm[c]]);
}

TEST(Score, RejectsMismatchedSequences) {
  const auto a = seq({{HeartState::kS1, 5}});
  const auto b = seq({{HeartState::kS1, 6}});
  EXPECT_THROW(score(a, b, 0.06), EvaluationError);
  const auto c = seq({{HeartState::kS1, 5}}, 30.0);
  EXPECT_THROW(score(a, c, 0.06), EvaluationError);
}

TEST(Aggregate, PoolsCountsBeforeAveraging) {
  // Recording A: truth S1, prediction S2. Recording B: diastole, correct.
  const auto a = score(seq({{HeartState::kS2, 6}}), seq({{HeartState::kS1, 6}}), 0.06);
  const auto b = score(seq({{HeartState::kDiastole, 6}}), seq({{HeartState::kDiastole, 6}}), 0.06);
  const std::vector<ScoreCounts> both{a, b};
  const auto r = aggregate(both, 0.06);
  EXPECT_EQ(r.n_recordings, 2u);
  EXPECT_EQ(r.per_class_f1[0], 0.0);  // S1: missed
  EXPECT_EQ(r.per_class_f1[1], 1.0);  // systole: absent everywhere
  EXPECT_EQ(r.per_class_f1[2], 0.0);  // S2: false alarms
  EXPECT_EQ(r.per_class_f1[3], 1.0);
  EXPECT_EQ(r.macro_f1, 0.5);
  EXPECT_EQ(r.counts[0].fn, 6u);
  EXPECT_EQ(r.counts[2].fp, 6u);

  // Pooled F1 differs from the mean of per-recording F1 when sizes differ.
  const auto c = score(seq({{HeartState::kS1, 2}, {HeartState::kDiastole, 8}}), seq({{HeartState::kS1, 10}}), 0.0);
  const auto d = score(seq({{HeartState::kS1, 30}}), seq({{HeartState::kS1, 30}}), 0.0);
  const std::vector<ScoreCounts> cd{c, d};
  const auto pooled = aggregate(cd, 0.0);
  // S1: P = 32/32, R = 32/40.
  EXPECT_NEAR(pooled.per_class_f1[0], 2.0 * 0.8 / 1.8, 1e-15);
  EXPECT_THROW(aggregate(std::span<const ScoreCounts>{}, 0.06), EvaluationError);
}

TEST(Onsets, GreedyMatching) {
  const auto truth = seq({{HeartState::kS1, 10}, {HeartState::kSystole, 10}, {HeartState::kS1, 10}});
  const auto pred = seq({{HeartState::kS1, 12}, {HeartState::kSystole, 5}, {HeartState::kS1, 13}});
  const auto on = score_onsets(pred, truth, 0.06);
  EXPECT_EQ(on[0].tp, 2u);  // 0 vs 0 and 17 vs 20
  EXPECT_EQ(on[1].tp, 1u);  // 12 vs 10
  const auto strict = score_onsets(pred, truth, 0.0);
  EXPECT_EQ(strict[1].tp, 0u);
  EXPECT_EQ(strict[1].fp, 1u);
  EXPECT_EQ(strict[1].fn, 1u);
  EXPECT_EQ(strict[2].f1(), 1.0);
}

TEST(Onsets, OneToOne) {
  // Two predicted S1 onsets near one truth onset: one match, one false alarm.
  const auto truth = seq({{HeartState::kDiastole, 10}, {HeartState::kS1, 10}});
  const auto pred = seq({{HeartState::kDiastole, 9}, {HeartState::kS1, 1}, {HeartState::kDiastole, 1}, {HeartState::kS1, 9}});
  const auto on = score_onsets(pred, truth, 0.06);
  EXPECT_EQ(on[0].tp, 1u);
  EXPECT_EQ(on[0].fp, 1u);
  EXPECT_EQ(on[0].fn, 0u);
}

std::vector<ManifestEntry> manifest_with_subjects(int subjects) {
  std::vector<ManifestEntry> m;
  for (int s = 0; s < subjects; ++s) {
    for (int r = 0; r < 1 + s % 3; ++r) {
      m.push_back({"rec" + std::to_string(s) + "_" + std::to_string(r), "subj" + std::to_string(s)});
    }
  }
  return m;
}

TEST(Subsample, SubjectCounts) {
  const auto m = manifest_with_subjects(764);
  const auto tenth = subsample_subjects(m, 0.10, 1);
  EXPECT_EQ(subjects_of(tenth).size(), 77u);
  EXPECT_EQ(subjects_of(subsample_subjects(m, 0.5, 1)).size(), 382u);
  const auto full = subsample_subjects(m, 1.0, 9);
  ASSERT_EQ(full.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(full[i].recording_id, m[i].recording_id);
  EXPECT_THROW(subsample_subjects(m, 0.0, 1), ConfigError);
  EXPECT_THROW(subsample_subjects(m, 1.5, 1), ConfigError);
}

TEST(Subsample, KeepsWholeSubjectsInOrder) {
  const auto m = manifest_with_subjects(50);
  const auto sub = subsample_subjects(m, 0.3, 4);
  const auto chosen = subjects_of(sub);
  const std::set<std::string> set(chosen.begin(), chosen.end());
  std::size_t expected = 0;
  for (const auto& e : m) expected += set.count(e.subject_id);
  EXPECT_EQ(sub.size(), expected);
  std::size_t pos = 0;
  for (const auto& e : sub) {
    while (pos < m.size() && m[pos].recording_id != e.recording_id) ++pos;
    ASSERT_LT(pos, m.size()) << e.recording_id << " out of order";
  }
}

TEST(Subsample, SeedDeterminism) {
  const auto m = manifest_with_subjects(200);
  const auto a = subsample_subjects(m, 0.1, 42);
  const auto b = subsample_subjects(m, 0.1, 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].recording_id, b[i].recording_id);
  const auto c = subsample_subjects(m, 0.1, 43);
  EXPECT_NE(subjects_of(a), subjects_of(c));
}

TEST(Manifest, RoundTripAndErrors) {
  test::TempDir dir("manifest");
  const auto m = manifest_with_subjects(5);
  write_manifest(dir / "m.tsv", m);
  const auto back = read_manifest(dir / "m.tsv");
  ASSERT_EQ(back.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(back[i].recording_id, m[i].recording_id);
    EXPECT_EQ(back[i].subject_id, m[i].subject_id);
  }
  std::ofstream(dir / "bad.tsv") << "# header\nrec_only\n";
  EXPECT_THROW(read_manifest(dir / "bad.tsv"), DataError);
  EXPECT_THROW(read_manifest(dir / "missing.tsv"), DataError);
}

TEST(Metrics, FormatAndFile) {
  const auto truth = seq({{HeartState::kS1, 3}, {HeartState::kSystole, 3}, {HeartState::kS2, 3}, {HeartState::kDiastole, 3}});
  const auto r = make_report(score(seq({{HeartState::kDiastole, 12}}), truth, 0.0), 0.0);
  const auto m = report_metrics(r);
  EXPECT_EQ(m.at("macro_f1"), "0.100000");
  EXPECT_EQ(m.at("f1.diastole"), "0.400000");
  EXPECT_EQ(m.at("n_recordings"), "1");
  test::TempDir dir("metrics");
  write_metrics(dir / "metrics.txt", m);
  std::ifstream in(dir / "metrics.txt");
  std::string line;
  std::size_t lines = 0;
  std::string prev;
  while (std::getline(in, line)) {
    EXPECT_NE(line.find('='), std::string::npos);
    EXPECT_LT(prev, line);
    prev = line;
    ++lines;
  }
  EXPECT_EQ(lines, m.size());
  EXPECT_NE(format_report(r).find("macro-F1: 0.100000"), std::string::npos);
}

}  // namespace
}  // namespace topseg
