#include "commands.hpp"

#include "pipeline.hpp"
#include "topseg/config.hpp"
#include "topseg/error.hpp"
#include "topseg/eval.hpp"
#include "topseg/parallel.hpp"
#include "topseg/refine.hpp"
#include "topseg/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <set>

namespace topseg::cli {

namespace {

struct CommonOptions {
  std::string config;
  std::size_t jobs{default_jobs()};
};

RunConfig base_config(const CommonOptions& common) {
  RunConfig cfg;
  if (!common.config.empty()) apply_config_file(common.config, cfg);
  cfg.validate();
  return cfg;
}

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

std::string seconds(double s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << s << " s";
  return os.str();
}

// Recordings named by a manifest, or every WAV when there is none.
std::vector<fs::path> select_wavs(const fs::path& data_dir, const std::optional<fs::path>& manifest) {
  std::vector<fs::path> wavs = list_wavs(data_dir);
  if (!manifest) return wavs;
  std::set<std::string> wanted;
  for (const auto& e : read_manifest(*manifest)) wanted.insert(e.recording_id);
  std::vector<fs::path> out;
  for (const auto& w : wavs) {
    if (wanted.count(w.stem().string())) out.push_back(w);
  }
  return out;
}

struct SynthOptions {
  fs::path out_dir;
  std::size_t n{50};
  std::uint64_t seed{7};
  double duration{10.0};
  double snr{20.0};
  double sample_rate{2000.0};
  std::size_t per_subject{2};
  double min_hr{60.0};
  double max_hr{100.0};
};

int cmd_synth(const SynthOptions& o) {
  CorpusOptions corpus;
  corpus.recordings = o.n;
  corpus.recordings_per_subject = o.per_subject;
  corpus.min_heart_rate = o.min_hr;
  corpus.max_heart_rate = o.max_hr;
  corpus.seed = o.seed;
  corpus.base.duration = o.duration;
  corpus.base.noise_snr = o.snr;
  corpus.base.sample_rate = o.sample_rate;
  const auto manifest = write_synth_corpus(o.out_dir, corpus);
  std::cout << "wrote " << manifest.size() << " recordings to " << o.out_dir.string() << '\n';
  return kOk;
}

struct ExtractOptions {
  fs::path data_dir;
  std::optional<fs::path> cache_dir;
  std::optional<fs::path> manifest;
};

int cmd_extract(const CommonOptions& common, const ExtractOptions& o) {
  RunConfig cfg = base_config(common);
  const std::vector<fs::path> wavs = select_wavs(o.data_dir, o.manifest);
  if (wavs.empty()) {
    std::cout << "0 recordings in " << o.data_dir.string() << '\n';
    return kOk;
  }
  const fs::path cache_dir = resolve_cache_dir(o.cache_dir, cfg, o.data_dir);
  cfg.features.calibration = ensure_calibration(cache_dir, wavs, cfg.features, std::cout);

  struct Outcome {
    bool ok{false};
    bool cached{false};
    double seconds{0.0};
    std::size_t frames{0};
    std::string error;
  };
  std::vector<Outcome> outcomes(wavs.size());
  std::mutex print;
  parallel_for(wavs.size(), common.jobs, [&](std::size_t i) {
    Outcome& out = outcomes[i];
    try {
      const FeatureOutcome f = load_or_extract(wavs[i], cache_dir, cfg.features);
      out = {true, f.from_cache, f.seconds, f.features.frames, {}};
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    std::lock_guard<std::mutex> lock(print);
    std::cout << wavs[i].stem().string() << '\t'
              << (out.ok ? (out.cached ? "cached" : "extracted") : "FAILED") << '\t';
    if (out.ok) {
      std::cout << out.frames << " frames\t" << seconds(out.seconds) << '\n';
    } else {
      std::cout << out.error << '\n';
    }
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < wavs.size(); ++i) {
    if (!outcomes[i].ok) {
      if (failed++ == 0) std::cerr << "failed recordings:\n";
      std::cerr << "  " << wavs[i].string() << ": " << outcomes[i].error << '\n';
    }
  }
  std::cout << wavs.size() - failed << " of " << wavs.size() << " recordings ready in " << cache_dir.string()
            << '\n';
  return failed ? kPartialFailure : kOk;
}

struct TrainOptions {
  fs::path data_dir;
  std::optional<fs::path> cache_dir;
  std::optional<fs::path> manifest;
  fs::path model;
  double budget_pct{100.0};
  std::uint64_t seed{1};
  std::string arch;
  int epochs{0};
};

int cmd_train(const CommonOptions& common, const TrainOptions& o, const CLI::App& sub) {
  RunConfig cfg = base_config(common);
  if (given(sub.get_option("--budget"))) cfg.budget = o.budget_pct / 100.0;
  if (given(sub.get_option("--seed"))) {
    cfg.seed = o.seed;
    cfg.decoder.seed = o.seed;
  }
  if (given(sub.get_option("--arch"))) {
    if (o.arch != "tcn" && o.arch != "mlp") throw ConfigError("--arch must be tcn or mlp");
    cfg.decoder.arch = o.arch == "mlp" ? DecoderArch::kMlp : DecoderArch::kTcn;
  }
  if (given(sub.get_option("--epochs"))) cfg.decoder.epochs = o.epochs;
  if (!o.model.empty()) cfg.model_path = o.model;
  if (cfg.model_path.empty()) throw ConfigError("train: --model is required");
  cfg.validate();

  // Manifest: explicit, then <data_dir>/manifest.tsv, else one subject per recording.
  std::vector<ManifestEntry> manifest;
  const fs::path manifest_path = o.manifest.value_or(o.data_dir / "manifest.tsv");
  if (fs::exists(manifest_path)) {
    manifest = read_manifest(manifest_path);
  } else if (o.manifest) {
    throw DataError("manifest not found: " + manifest_path.string());
  } else {
    for (const auto& w : list_wavs(o.data_dir)) manifest.push_back({w.stem().string(), w.stem().string()});
  }
  const std::vector<ManifestEntry> selected = subsample_subjects(manifest, cfg.budget, cfg.seed);
  if (selected.empty()) throw DataError("train: no recordings selected");

  std::set<std::string> validation_subjects;
  const std::size_t n_subjects = subjects_of(selected).size();
  if (cfg.validation_fraction > 0.0 && n_subjects >= 2) {
    for (const auto& e : subsample_subjects(selected, cfg.validation_fraction, cfg.seed + 1)) {
      validation_subjects.insert(e.subject_id);
    }
    if (validation_subjects.size() == n_subjects) validation_subjects.clear();
  }

  const fs::path cache_dir = resolve_cache_dir(o.cache_dir, cfg, o.data_dir);
  std::vector<fs::path> wavs;
  for (const auto& e : selected) {
    const fs::path w = o.data_dir / (e.recording_id + ".wav");
    if (!fs::exists(w)) throw DataError("train: recording listed in the manifest is missing: " + w.string());
    wavs.push_back(w);
  }
  cfg.features.calibration = ensure_calibration(cache_dir, list_wavs(o.data_dir), cfg.features, std::cout);

  const auto start = std::chrono::steady_clock::now();
  std::vector<FrameFeatureMatrix> features(wavs.size());
  std::vector<LabelSequence> labels(wavs.size());
  parallel_for(wavs.size(), common.jobs, [&](std::size_t i) {
    features[i] = load_or_extract(wavs[i], cache_dir, cfg.features).features;
    labels[i] = load_labels(o.data_dir, selected[i].recording_id, features[i].frame_rate, features[i].frames);
  });
  std::vector<TrainingExample> train_set;
  std::vector<TrainingExample> validation_set;
  for (std::size_t i = 0; i < wavs.size(); ++i) {
    auto& target = validation_subjects.count(selected[i].subject_id) ? validation_set : train_set;
    target.push_back({&features[i], &labels[i]});
  }
  std::cout << "training on " << train_set.size() << " recordings, validating on " << validation_set.size()
            << " (" << n_subjects << " subjects at budget " << cfg.budget * 100.0 << "%)\n";

  const TrainResult result = train(train_set, cfg.decoder, validation_set);
  if (cfg.model_path.has_parent_path()) fs::create_directories(cfg.model_path.parent_path());
  save_model(cfg.model_path, result.params);
  fs::path sidecar = cfg.model_path;
  sidecar += ".calibration.json";
  write_calibration(sidecar, cfg.features.calibration);

  fs::path log_path = cfg.model_path;
  log_path += ".log";
  std::ofstream log(log_path, std::ios::trunc);
  log << std::setprecision(9);
  log << "recordings_train " << train_set.size() << "\nrecordings_validation " << validation_set.size() << '\n';
  log << "budget " << cfg.budget << "\nseed " << cfg.seed << '\n';
  log << "epoch\ttrain_loss\tvalidation_loss\n";
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    log << e + 1 << '\t' << result.train_loss[e] << '\t';
    if (e < result.validation_loss.size()) {
      log << result.validation_loss[e];
    } else {
      log << '-';
    }
    log << '\n';
  }
  log << "best_epoch " << result.best_epoch + 1 << "\nstopped_early " << (result.stopped_early ? 1 : 0) << '\n';
  for (const auto& w : result.warnings) {
    log << "warning " << w << '\n';
    std::cerr << "warning: " << w << '\n';
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "trained " << result.train_loss.size() << " epochs (best " << result.best_epoch + 1
            << (result.stopped_early ? ", stopped early" : "") << ") in " << seconds(elapsed) << "; model "
            << cfg.model_path.string() << '\n';
  return kOk;
}

struct SegmentOptions {
  fs::path data_dir;
  std::optional<fs::path> cache_dir;
  std::optional<fs::path> manifest;
  fs::path model;
  fs::path out_dir;
  bool no_refine{false};
};

int cmd_segment(const CommonOptions& common, const SegmentOptions& o) {
  RunConfig cfg = base_config(common);
  if (!o.model.empty()) cfg.model_path = o.model;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  if (cfg.output_dir.empty()) throw ConfigError("segment: --out-dir is required");
  if (!fs::exists(cfg.model_path)) throw DataError("model file not found: " + cfg.model_path.string());
  const DecoderParams params = load_model(cfg.model_path);
  if (params.input_dims != cfg.features.dims()) {
    throw ModelInputError("model expects " + std::to_string(params.input_dims) +
                          " feature columns but the feature configuration yields " +
                          std::to_string(cfg.features.dims()));
  }

  const std::vector<fs::path> wavs = select_wavs(o.data_dir, o.manifest);
  if (wavs.empty()) {
    std::cout << "0 recordings in " << o.data_dir.string() << '\n';
    return kOk;
  }
  const fs::path cache_dir = resolve_cache_dir(o.cache_dir, cfg, o.data_dir);
  fs::path sidecar = cfg.model_path;
  sidecar += ".calibration.json";
  if (fs::exists(sidecar)) {
    cfg.features.calibration = read_calibration(sidecar);
    if (!fs::exists(calibration_path(cache_dir))) {
      fs::create_directories(cache_dir);
      write_calibration(calibration_path(cache_dir), cfg.features.calibration);
    }
  } else {
    cfg.features.calibration = ensure_calibration(cache_dir, wavs, cfg.features, std::cout);
  }
  fs::create_directories(cfg.output_dir);

  std::vector<std::string> errors(wavs.size());
  std::mutex print;
  parallel_for(wavs.size(), common.jobs, [&](std::size_t i) {
    const std::string id = wavs[i].stem().string();
    std::string note;
    try {
      const FrameFeatureMatrix fm = load_or_extract(wavs[i], cache_dir, cfg.features).features;
      const PosteriorSequence raw = forward(params, fm);
      write_posteriors(cfg.output_dir / (id + ".raw.tsv"), raw);
      PosteriorSequence final_p = raw;
      if (!o.no_refine) {
        const TopologyTarget target = make_target(fm, cfg.features.landscape, cfg.refine);
        final_p = refine_pgd(raw, target, cfg.refine).posteriors;
        write_posteriors(cfg.output_dir / (id + ".refined.tsv"), final_p);
      }
      const DecodeResult decoded = constrained_decode(final_p, cfg.durations);
      if (decoded.fallback) note = " (" + decoded.warning + ")";
      write_label_file(cfg.output_dir / (id + ".labels"), intervals_from_labels(decoded.labels));
    } catch (const ModelInputError&) {
      throw;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
    std::lock_guard<std::mutex> lock(print);
    std::cout << id << '\t' << (errors[i].empty() ? "ok" + note : "FAILED: " + errors[i]) << '\n';
  });
  std::size_t failed = 0;
  for (const auto& e : errors) failed += e.empty() ? 0 : 1;
  std::cout << wavs.size() - failed << " of " << wavs.size() << " recordings segmented into "
            << cfg.output_dir.string() << '\n';
  return failed ? kPartialFailure : kOk;
}

struct EvalOptions {
  fs::path pred_dir;
  fs::path truth_dir;
  double tol{0.060};
  std::optional<fs::path> metrics;
  double frame_rate{60.0};
};

std::map<std::string, fs::path> label_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".labels") {
      out[entry.path().stem().string()] = entry.path();
    }
  }
  return out;
}

std::size_t frames_covered(const std::vector<LabelInterval>& intervals, double rate) {
  double end = 0.0;
  for (const auto& iv : intervals) end = std::max(end, iv.end);
  return static_cast<std::size_t>(std::llround(end * rate));
}

int cmd_eval(const CommonOptions& common, const EvalOptions& o, const CLI::App& sub) {
  RunConfig cfg = base_config(common);
  if (given(sub.get_option("--tol"))) cfg.tolerance = o.tol;
  cfg.validate();
  const auto preds = label_files(o.pred_dir);
  const auto truths = label_files(o.truth_dir);
  std::vector<std::string> ids;
  std::vector<std::string> unmatched;
  for (const auto& [id, path] : preds) {
    (truths.count(id) ? ids : unmatched).push_back(id);
  }
  for (const auto& [id, path] : truths) {
    if (!preds.count(id)) unmatched.push_back(id);
  }
  if (!unmatched.empty()) {
    std::cerr << "unmatched recording ids (excluded):";
    for (const auto& id : unmatched) std::cerr << ' ' << id;
    std::cerr << '\n';
  }
  if (ids.empty()) {
    std::cerr << "no recording ids in common between " << o.pred_dir.string() << " and " << o.truth_dir.string()
              << '\n';
    return kConfigOrDataError;
  }

  std::vector<ScoreCounts> per_recording;
  std::array<OnsetCounts, kNumStates> onsets{};
  std::cout << std::left << std::setw(24) << "recording" << "macro_f1\n";
  for (const auto& id : ids) {
    const auto pred_iv = read_label_file(preds.at(id));
    const std::size_t frames = frames_covered(pred_iv, o.frame_rate);
    const LabelSequence pred = labels_from_intervals(pred_iv, o.frame_rate, frames);
    const LabelSequence truth = labels_from_intervals(read_label_file(truths.at(id)), o.frame_rate, frames);
    per_recording.push_back(score(pred, truth, cfg.tolerance));
    const auto on = score_onsets(pred, truth, cfg.tolerance);
    for (std::size_t c = 0; c < kNumStates; ++c) {
      onsets[c].tp += on[c].tp;
      onsets[c].fp += on[c].fp;
      onsets[c].fn += on[c].fn;
    }
    std::cout << std::setw(24) << id << std::fixed << std::setprecision(4)
              << make_report(per_recording.back(), cfg.tolerance).macro_f1 << '\n';
  }
  const EvalReport report = aggregate(per_recording, cfg.tolerance);
  std::cout << format_report(report);

  auto metrics = report_metrics(report);
  double onset_sum = 0.0;
  for (std::size_t c = 0; c < kNumStates; ++c) {
    std::ostringstream v;
    v << std::fixed << std::setprecision(6) << onsets[c].f1();
    metrics["onset_f1." + std::string(to_string(kAllStates[c]))] = v.str();
    onset_sum += onsets[c].f1();
  }
  std::ostringstream macro;
  macro << std::fixed << std::setprecision(6) << onset_sum / static_cast<double>(kNumStates);
  metrics["onset_macro_f1"] = macro.str();
  metrics["n_unmatched"] = std::to_string(unmatched.size());
  const fs::path metrics_path = o.metrics.value_or(o.pred_dir / "metrics.txt");
  write_metrics(metrics_path, metrics);
  std::cout << "metrics written to " << metrics_path.string() << '\n';
  return unmatched.empty() ? kOk : kPartialFailure;
}

}  // namespace

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Topology-guided heart sound segmentation"};
  app.name("topseg");
  app.require_subcommand(1);
  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Config file with [section] key = value entries")
        ->check(CLI::ExistingFile);
    sub->add_option("--jobs", common.jobs, "Parallel recordings")->check(CLI::PositiveNumber);
  };

  SynthOptions synth_opt;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic labelled PCG corpus");
  synth->add_option("--out-dir", synth_opt.out_dir, "Output directory")->required();
  synth->add_option("--n", synth_opt.n, "Number of recordings");
  synth->add_option("--seed", synth_opt.seed, "Random seed");
  synth->add_option("--duration", synth_opt.duration, "Seconds per recording")->check(CLI::PositiveNumber);
  synth->add_option("--snr", synth_opt.snr, "Noise SNR in dB (inf for none)");
  synth->add_option("--sample-rate", synth_opt.sample_rate, "Output sample rate in Hz");
  synth->add_option("--per-subject", synth_opt.per_subject, "Recordings per synthetic subject")
      ->check(CLI::PositiveNumber);
  synth->add_option("--min-hr", synth_opt.min_hr, "Lowest subject heart rate (bpm)");
  synth->add_option("--max-hr", synth_opt.max_hr, "Highest subject heart rate (bpm)");

  ExtractOptions extract_opt;
  CLI::App* extract = app.add_subcommand("extract", "Compute and cache topological features");
  extract->add_option("--data-dir", extract_opt.data_dir, "Directory of WAV files")->required();
  extract->add_option("--cache-dir", extract_opt.cache_dir, "Feature cache directory");
  extract->add_option("--manifest", extract_opt.manifest, "Restrict to recordings in this manifest");
  add_common(extract);

  TrainOptions train_opt;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the framewise decoder");
  train_cmd->add_option("--data-dir", train_opt.data_dir, "Directory of WAV and .labels files")->required();
  train_cmd->add_option("--cache-dir", train_opt.cache_dir, "Feature cache directory");
  train_cmd->add_option("--manifest", train_opt.manifest, "recording_id subject_id list");
  train_cmd->add_option("--model", train_opt.model, "Output model file (.tsegm)");
  train_cmd->add_option("--budget", train_opt.budget_pct, "Percent of subjects used")->check(CLI::Range(0.0, 100.0));
  train_cmd->add_option("--seed", train_opt.seed, "Subsampling and initialization seed");
  train_cmd->add_option("--arch", train_opt.arch, "tcn or mlp");
  train_cmd->add_option("--epochs", train_opt.epochs, "Maximum epochs");
  add_common(train_cmd);

  SegmentOptions segment_opt;
  CLI::App* segment = app.add_subcommand("segment", "Segment recordings with a trained model");
  segment->add_option("--data-dir", segment_opt.data_dir, "Directory of WAV files")->required();
  segment->add_option("--cache-dir", segment_opt.cache_dir, "Feature cache directory");
  segment->add_option("--manifest", segment_opt.manifest, "Restrict to recordings in this manifest");
  segment->add_option("--model", segment_opt.model, "Model file");
  segment->add_option("--out-dir", segment_opt.out_dir, "Output directory");
  segment->add_flag("--no-refine", segment_opt.no_refine, "Decode raw posteriors without refinement");
  add_common(segment);

  EvalOptions eval_opt;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score predicted label files against ground truth");
  eval_cmd->add_option("--pred-dir", eval_opt.pred_dir, "Predicted .labels directory")->required();
  eval_cmd->add_option("--truth-dir", eval_opt.truth_dir, "Ground-truth .labels directory")->required();
  eval_cmd->add_option("--tol", eval_opt.tol, "Boundary tolerance in seconds");
  eval_cmd->add_option("--metrics", eval_opt.metrics, "key=value metrics output");
  add_common(eval_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigOrDataError;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_opt);
    if (extract->parsed()) return cmd_extract(common, extract_opt);
    if (train_cmd->parsed()) return cmd_train(common, train_opt, *train_cmd);
    if (segment->parsed()) return cmd_segment(common, segment_opt);
    if (eval_cmd->parsed()) return cmd_eval(common, eval_opt, *eval_cmd);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigOrDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigOrDataError;
  }
  return kConfigOrDataError;
}

}  // namespace topseg::cli
