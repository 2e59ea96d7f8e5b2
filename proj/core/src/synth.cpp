#include "topseg/synth.hpp"

#include "rng.hpp"
#include "topseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace topseg {

namespace {

void add_burst(std::vector<double>& out, double rate, double start, double end, double freq, double amplitude,
               double phase) {
  const double center = 0.5 * (start + end);
  const double sigma = (end - start) / 6.0;
  const auto n = static_cast<long>(out.size());
  const long first = std::max(0L, static_cast<long>(std::ceil(start * rate)));
  const long last = std::min(n, static_cast<long>(std::ceil(end * rate)));
  for (long i = first; i < last; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double z = (t - center) / sigma;
    out[static_cast<std::size_t>(i)] +=
        amplitude * std::exp(-0.5 * z * z) * std::sin(2.0 * std::numbers::pi * freq * (t - start) + phase);
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (!(heart_rate >= 30.0 && heart_rate <= 240.0)) throw ConfigError("synth: heart_rate must lie in [30, 240] bpm");
  if (!(s1_dur_ms > 0.0 && s2_dur_ms > 0.0)) throw ConfigError("synth: S1/S2 durations must be positive");
  if (!(hr_jitter >= 0.0 && hr_jitter < 0.5)) throw ConfigError("synth: hr_jitter must lie in [0, 0.5)");
  if (!(duration > 0.0)) throw ConfigError("synth: duration must be positive");
  if (!(sample_rate > 2.0 * std::max(s1_freq, s2_freq))) throw ConfigError("synth: sample rate below Nyquist");
  if (!(label_rate > 0.0)) throw ConfigError("synth: label_rate must be positive");
  if (std::isnan(noise_snr)) throw ConfigError("synth: noise_snr is NaN");
  const double shortest = 60.0 / heart_rate * (1.0 - hr_jitter);
  if (!((s1_dur_ms + s2_dur_ms) / 1000.0 + 0.3 * shortest < shortest)) {
    throw ConfigError("synth: S1 + systole + S2 does not fit in one cardiac period");
  }
}

SynthRecording generate(const SynthConfig& cfg) {
  cfg.validate();
  detail::Rng rng(cfg.seed);
  SynthRecording out;
  Recording& rec = out.recording;
  rec.sample_rate = cfg.sample_rate;
  rec.samples.assign(static_cast<std::size_t>(std::llround(cfg.duration * cfg.sample_rate)), 0.0);
  const double s1 = cfg.s1_dur_ms / 1000.0;
  const double s2 = cfg.s2_dur_ms / 1000.0;
  const double nominal = 60.0 / cfg.heart_rate;

  auto push = [&](double a, double b, HeartState s) {
    a = std::min(a, cfg.duration);
    b = std::min(b, cfg.duration);
    if (b > a) out.intervals.push_back({a, b, s});
  };
  for (double onset = 0.0; onset < cfg.duration;) {
    const double period = nominal * (1.0 + rng.uniform(-cfg.hr_jitter, cfg.hr_jitter));
    const double s2_onset = onset + s1 + 0.3 * period;
    const double amp1 = rng.uniform(0.8, 1.2);
    const double amp2 = 0.7 * rng.uniform(0.8, 1.2);
    const double ph1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ph2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    add_burst(rec.samples, cfg.sample_rate, onset, onset + s1, cfg.s1_freq, amp1, ph1);
    add_burst(rec.samples, cfg.sample_rate, s2_onset, s2_onset + s2, cfg.s2_freq, amp2, ph2);
    push(onset, onset + s1, HeartState::kS1);
    push(onset + s1, s2_onset, HeartState::kSystole);
    push(s2_onset, s2_onset + s2, HeartState::kS2);
    push(s2_onset + s2, onset + period, HeartState::kDiastole);
    onset += period;
  }

  if (std::isfinite(cfg.noise_snr)) {
    double power = 0.0;
    for (double v : rec.samples) power += v * v;
    power /= static_cast<double>(std::max<std::size_t>(1, rec.samples.size()));
    const double sd = std::sqrt(power / std::pow(10.0, cfg.noise_snr / 10.0));
    for (double& v : rec.samples) v += sd * rng.normal();
  }
  double peak = 0.0;
  for (double v : rec.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : rec.samples) v *= 0.8 / peak;
  }
  const auto frames = static_cast<std::size_t>(std::ceil(cfg.duration * cfg.label_rate - 1e-9));
  out.labels = labels_from_intervals(out.intervals, cfg.label_rate, frames);
  return out;
}

std::vector<ManifestEntry> write_synth_corpus(const std::filesystem::path& out_dir, const CorpusOptions& opts) {
  if (opts.recordings_per_subject == 0) throw ConfigError("synth: recordings_per_subject must be positive");
  if (!(opts.min_heart_rate <= opts.max_heart_rate)) throw ConfigError("synth: empty heart-rate range");
  std::filesystem::create_directories(out_dir);
  detail::Rng rng(opts.seed);
  std::vector<ManifestEntry> manifest;
  double subject_rate = opts.base.heart_rate;
  for (std::size_t i = 0; i < opts.recordings; ++i) {
    const std::size_t subject = i / opts.recordings_per_subject;
    if (i % opts.recordings_per_subject == 0) subject_rate = rng.uniform(opts.min_heart_rate, opts.max_heart_rate);
    SynthConfig cfg = opts.base;
    cfg.heart_rate = subject_rate * rng.uniform(0.97, 1.03);
    cfg.seed = opts.seed * 1000003ULL + i;
    char id[32];
    char sid[32];
    std::snprintf(id, sizeof id, "syn%04zu", i);
    std::snprintf(sid, sizeof sid, "subj%03zu", subject);
    SynthRecording s = generate(cfg);
    s.recording.id = id;
    write_wav(out_dir / (std::string(id) + ".wav"), s.recording);
    write_label_file(out_dir / (std::string(id) + ".labels"), s.intervals);
    manifest.push_back({id, sid});
  }
  write_manifest(out_dir / "manifest.tsv", manifest);
  return manifest;
}

}  // namespace topseg
