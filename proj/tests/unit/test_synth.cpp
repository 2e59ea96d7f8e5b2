#include "test_util.hpp"
#include "topseg/error.hpp"
#include "topseg/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace topseg {
namespace {

SynthConfig quiet(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.noise_snr = std::numeric_limits<double>::infinity();
  cfg.seed = seed;
  return cfg;
}

bool inside_sound(const std::vector<LabelInterval>& intervals, double t) {
  for (const auto& iv : intervals) {
    if ((iv.state == HeartState::kS1 || iv.state == HeartState::kS2) && t >= iv.start && t < iv.end) return true;
  }
  return false;
}

double energy(const std::vector<double>& x, std::size_t begin, std::size_t end) {
  double e = 0.0;
  for (std::size_t i = begin; i < end; ++i) e += x[i] * x[i];
  return e;
}

TEST(Synth, CycleCountAt75Bpm) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    const auto s = generate(cfg);
    int complete = 0;
    for (const auto& iv : s.intervals) {
      if (iv.state == HeartState::kDiastole && iv.end < cfg.duration) ++complete;
    }
    EXPECT_GE(complete, 12);
    EXPECT_LE(complete, 13);
    EXPECT_EQ(s.recording.samples.size(), 20000u);
    EXPECT_EQ(s.labels.size(), 600u);
    EXPECT_EQ(s.labels.frame_rate, 60.0);
  }
}

TEST(Synth, SilentOutsideSoundsWithoutNoise) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = generate(quiet(seed));
    const auto& x = s.recording.samples;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(i) / s.recording.sample_rate;
      if (x[i] != 0.0) {
        EXPECT_TRUE(inside_sound(s.intervals, t)) << "sample " << i;
      }
    }
    for (const auto& iv : s.intervals) {
      if (iv.state != HeartState::kS1 && iv.state != HeartState::kS2) continue;
      if (iv.end - iv.start < 0.02) continue;  // clipped at the end of the recording
      const auto a = static_cast<std::size_t>(std::ceil(iv.start * 2000.0));
      const auto b = static_cast<std::size_t>(std::ceil(iv.end * 2000.0));
      EXPECT_GT(energy(x, a, b), 0.0);
    }
  }
}

TEST(Synth, Deterministic) {
  SynthConfig cfg;
  cfg.seed = 99;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  EXPECT_EQ(a.recording.samples, b.recording.samples);
  EXPECT_EQ(a.labels.states, b.labels.states);
  cfg.seed = 100;
  EXPECT_NE(generate(cfg).recording.samples, a.recording.samples);
}

TEST(Synth, StatesAreCyclic) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.heart_rate = 60.0 + 3.0 * static_cast<double>(seed);
    const auto s = generate(cfg);
    ASSERT_FALSE(s.intervals.empty());
    EXPECT_EQ(s.intervals.front().state, HeartState::kS1);
    EXPECT_EQ(s.intervals.front().start, 0.0);
    for (std::size_t i = 1; i < s.intervals.size(); ++i) {
      EXPECT_EQ(s.intervals[i].state, next_state(s.intervals[i - 1].state));
      EXPECT_DOUBLE_EQ(s.intervals[i].start, s.intervals[i - 1].end);
    }
    for (std::size_t t = 1; t < s.labels.size(); ++t) {
      const HeartState a = s.labels.states[t - 1];
      const HeartState b = s.labels.states[t];
      EXPECT_TRUE(a == b || b == next_state(a)) << "frame " << t;
    }
  }
}

TEST(Synth, SystoleIsAboutAThirdOfTheCycle) {
  const auto s = generate(quiet(3));
  for (std::size_t i = 0; i + 3 < s.intervals.size(); i += 4) {
    if (s.intervals[i + 3].end >= 10.0) break;  // cycle cut by the end of the recording
    const double period = s.intervals[i + 3].end - s.intervals[i].start;
    const double systole = s.intervals[i + 1].end - s.intervals[i + 1].start;
    EXPECT_NEAR(systole / period, 0.3, 1e-9);
  }
}

TEST(Synth, PassbandKeepsTheTones) {
  PreprocessConfig pre;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = generate(quiet(seed));
    const auto filtered = bandpass_zero_phase(s.recording, pre);
    const double ratio = std::sqrt(energy(filtered.samples, 0, filtered.samples.size()) /
                                   energy(s.recording.samples, 0, s.recording.samples.size()));
    EXPECT_GT(ratio, 0.95);
    EXPECT_LT(ratio, 1.05);
  }
}

TEST(Synth, RejectsInfeasibleConfigs) {
  SynthConfig cfg;
  cfg.heart_rate = 240.0;
  EXPECT_THROW(generate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.s1_dur_ms = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.s2_freq = 1200.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.heart_rate = 120.0;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(SynthCorpus, WritesFilesAndManifest) {
  test::TempDir dir("synth_corpus");
  CorpusOptions opts;
  opts.recordings = 5;
  opts.base.duration = 3.0;
  const auto manifest = write_synth_corpus(dir.path(), opts);
  ASSERT_EQ(manifest.size(), 5u);
  EXPECT_EQ(subjects_of(manifest).size(), 3u);
  EXPECT_EQ(manifest[0].subject_id, manifest[1].subject_id);
  for (const auto& e : manifest) {
    const Recording r = load_wav(dir / (e.recording_id + ".wav"));
    EXPECT_EQ(r.sample_rate, 2000.0);
    EXPECT_EQ(r.samples.size(), 6000u);
    EXPECT_FALSE(read_label_file(dir / (e.recording_id + ".labels")).empty());
  }
  EXPECT_EQ(read_manifest(dir / "manifest.tsv").size(), 5u);
}

}  // namespace
}  // namespace topseg
