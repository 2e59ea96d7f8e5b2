#include "test_util.hpp"
#include "commands.hpp"
#include "pipeline.hpp"
#include "topseg/eval.hpp"
#include "topseg/labels.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <map>

namespace topseg {
namespace {

namespace fs = std::filesystem;

std::map<std::string, std::string> read_metrics(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Shared corpus: four short recordings from two subjects plus a small
// decoder configuration so that training takes seconds.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new test::TempDir("cli");
    ASSERT_EQ(cli::run({"synth", "--out-dir", data().string(), "--n", "4", "--seed", "3"}), cli::kOk);
    std::ofstream(config()) << "[decoder]\nchannels = 8\ndilations = [1, 2]\nepochs = 3\nchunk_frames = 200\n";
    ASSERT_EQ(cli::run({"extract", "--data-dir", data().string(), "--cache-dir", cache().string()}), cli::kOk);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static fs::path data() { return *dir_ / "data"; }
  static fs::path cache() { return *dir_ / "cache"; }
  static fs::path config() { return *dir_ / "small.ini"; }
  static fs::path scratch(const std::string& name) {
    const fs::path p = *dir_ / name;
    fs::create_directories(p);
    return p;
  }

  static test::TempDir* dir_;
};

test::TempDir* CliTest::dir_ = nullptr;

TEST_F(CliTest, ExtractEmptyDirectory) {
  const fs::path empty = scratch("empty");
  EXPECT_EQ(cli::run({"extract", "--data-dir", empty.string()}), cli::kOk);
}

TEST_F(CliTest, ExtractReportsCorruptFiles) {
  const fs::path mixed = scratch("mixed");
  fs::copy_file(data() / "syn0000.wav", mixed / "syn0000.wav", fs::copy_options::overwrite_existing);
  std::ofstream(mixed / "broken.wav") << "RIFF....not a wave file";
  fs::create_directories(mixed / "cache");
  fs::copy_file(cli::calibration_path(cache()), cli::calibration_path(mixed / "cache"),
                fs::copy_options::overwrite_existing);
  EXPECT_EQ(cli::run({"extract", "--data-dir", mixed.string(), "--cache-dir", (mixed / "cache").string()}),
            cli::kPartialFailure);
  EXPECT_TRUE(fs::exists(cli::cache_path(mixed / "cache", "syn0000")));
}

TEST_F(CliTest, WarmCacheIsNotRewritten) {
  std::map<std::string, fs::file_time_type> before;
  for (const auto& e : fs::directory_iterator(cache())) before[e.path().filename().string()] = e.last_write_time();
  ASSERT_GE(before.size(), 5u);
  EXPECT_EQ(cli::run({"extract", "--data-dir", data().string(), "--cache-dir", cache().string()}), cli::kOk);
  for (const auto& e : fs::directory_iterator(cache())) {
    const auto it = before.find(e.path().filename().string());
    ASSERT_NE(it, before.end()) << e.path();
    EXPECT_EQ(it->second, e.last_write_time()) << e.path();
  }
}

TEST_F(CliTest, SegmentWithoutModelIsADataError) {
  EXPECT_EQ(cli::run({"segment", "--data-dir", data().string(), "--cache-dir", cache().string(), "--model",
                      (*dir_ / "nope.tsegm").string(), "--out-dir", scratch("seg_missing").string()}),
            cli::kConfigOrDataError);
}

TEST_F(CliTest, UnknownSubcommandOrConfigIsAnError) {
  EXPECT_EQ(cli::run({"frobnicate"}), cli::kConfigOrDataError);
  const fs::path bad = *dir_ / "bad.ini";
  std::ofstream(bad) << "[decoder]\nwidth = 3\n";
  EXPECT_EQ(cli::run({"eval", "--pred-dir", data().string(), "--truth-dir", data().string(), "--config",
                      bad.string()}),
            cli::kConfigOrDataError);
}

TEST_F(CliTest, EvalIdentityIsPerfect) {
  const fs::path metrics = *dir_ / "identity.txt";
  EXPECT_EQ(cli::run({"eval", "--pred-dir", data().string(), "--truth-dir", data().string(), "--metrics",
                      metrics.string()}),
            cli::kOk);
  const auto m = read_metrics(metrics);
  EXPECT_EQ(m.at("macro_f1"), "1.000000");
  EXPECT_EQ(m.at("n_recordings"), "4");
}

TEST_F(CliTest, EvalToleranceMonotoneAndConfigPrecedence) {
  // Predictions: truth intervals shifted late by 40 ms.
  const fs::path pred = scratch("shifted");
  for (const auto& e : read_manifest(data() / "manifest.tsv")) {
    auto iv = read_label_file(data() / (e.recording_id + ".labels"));
    for (auto& v : iv) {
      v.start = v.start == 0.0 ? 0.0 : v.start + 0.04;
      v.end += 0.04;
    }
    write_label_file(pred / (e.recording_id + ".labels"), iv);
  }
  const fs::path strict = *dir_ / "strict.txt";
  const fs::path loose = *dir_ / "loose.txt";
  ASSERT_EQ(cli::run({"eval", "--pred-dir", pred.string(), "--truth-dir", data().string(), "--tol", "0",
                      "--metrics", strict.string()}),
            cli::kOk);
  ASSERT_EQ(cli::run({"eval", "--pred-dir", pred.string(), "--truth-dir", data().string(), "--tol", "0.06",
                      "--metrics", loose.string()}),
            cli::kOk);
  const double s = std::stod(read_metrics(strict).at("macro_f1"));
  const double l = std::stod(read_metrics(loose).at("macro_f1"));
  EXPECT_LT(s, 1.0);
  EXPECT_LE(s, l);
  EXPECT_EQ(l, 1.0);

  // Config sets the tolerance; an explicit flag wins over it.
  const fs::path cfg = *dir_ / "tol.ini";
  std::ofstream(cfg) << "[eval]\ntolerance = 0.0\n";
  const fs::path from_cfg = *dir_ / "from_cfg.txt";
  const fs::path from_flag = *dir_ / "from_flag.txt";
  ASSERT_EQ(cli::run({"eval", "--pred-dir", pred.string(), "--truth-dir", data().string(), "--config", cfg.string(),
                      "--metrics", from_cfg.string()}),
            cli::kOk);
  ASSERT_EQ(cli::run({"eval", "--pred-dir", pred.string(), "--truth-dir", data().string(), "--config", cfg.string(),
                      "--tol", "0.06", "--metrics", from_flag.string()}),
            cli::kOk);
  EXPECT_EQ(read_metrics(from_cfg).at("tolerance_s"), "0.000000");
  EXPECT_EQ(read_metrics(from_cfg).at("macro_f1"), read_metrics(strict).at("macro_f1"));
  EXPECT_EQ(read_metrics(from_flag).at("tolerance_s"), "0.060000");
}

TEST_F(CliTest, EvalWithoutCommonIdsIsAnError) {
  const fs::path other = scratch("other_ids");
  write_label_file(other / "unrelated.labels", {{0.0, 1.0, HeartState::kS1}});
  EXPECT_EQ(cli::run({"eval", "--pred-dir", other.string(), "--truth-dir", data().string()}),
            cli::kConfigOrDataError);
}

TEST_F(CliTest, EvalWithPartialOverlapIsPartial) {
  const fs::path some = scratch("some_ids");
  fs::copy_file(data() / "syn0000.labels", some / "syn0000.labels", fs::copy_options::overwrite_existing);
  EXPECT_EQ(cli::run({"eval", "--pred-dir", some.string(), "--truth-dir", data().string()}), cli::kPartialFailure);
}

TEST_F(CliTest, TrainIsDeterministicAndSegmentRuns) {
  const fs::path a = *dir_ / "a.tsegm";
  const fs::path b = *dir_ / "b.tsegm";
  for (const auto& model : {a, b}) {
    ASSERT_EQ(cli::run({"train", "--data-dir", data().string(), "--cache-dir", cache().string(), "--model",
                        model.string(), "--budget", "10", "--seed", "1", "--config", config().string()}),
              cli::kOk);
  }
  const std::string bytes = slurp(a);
  ASSERT_FALSE(bytes.empty());
  EXPECT_TRUE(bytes == slurp(b)) << "model files differ";
  EXPECT_TRUE(fs::exists(a.string() + ".calibration.json"));
  EXPECT_TRUE(fs::exists(a.string() + ".log"));

  const fs::path out = scratch("segmented");
  ASSERT_EQ(cli::run({"segment", "--data-dir", data().string(), "--cache-dir", cache().string(), "--model",
                      a.string(), "--out-dir", out.string(), "--config", config().string()}),
            cli::kOk);
  for (const auto& e : read_manifest(data() / "manifest.tsv")) {
    EXPECT_TRUE(fs::exists(out / (e.recording_id + ".labels")));
    EXPECT_TRUE(fs::exists(out / (e.recording_id + ".raw.tsv")));
    EXPECT_TRUE(fs::exists(out / (e.recording_id + ".refined.tsv")));
  }
  EXPECT_EQ(cli::run({"eval", "--pred-dir", out.string(), "--truth-dir", data().string()}), cli::kOk);
  EXPECT_TRUE(fs::exists(out / "metrics.txt"));
}

TEST_F(CliTest, TrainRejectsBadBudget) {
  EXPECT_EQ(cli::run({"train", "--data-dir", data().string(), "--cache-dir", cache().string(), "--model",
                      (*dir_ / "c.tsegm").string(), "--budget", "0"}),
            cli::kConfigOrDataError);
}

}  // namespace
}  // namespace topseg
