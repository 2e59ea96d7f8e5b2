#include "test_util.hpp"
#include "topseg/config.hpp"
#include "topseg/error.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace topseg {
namespace {

std::filesystem::path write_file(const test::TempDir& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

TEST(Config, ParsesSections) {
  test::TempDir dir("config");
  const auto file = write_file(dir, "run.ini",
                               "# comment\n"
                               "[decoder]\narch = mlp\ndilations = [1, 3]\nepochs = 7\n"
                               "[refine]\nlambda_s = 0.5\nstep_size = 0.01\nreduction = mean\n"
                               "[decode]\nmin_s1 = 0.08\n"
                               "[scales.fine]\ndim = 9\n"
                               "[eval]\ntolerance = 0.1\n"
                               "[run]\nbudget = 0.5\nseed = 12\n"
                               "[paths]\nmodel = \"/tmp/m.bin\"\n");
  RunConfig cfg;
  apply_config_file(file, cfg);
  EXPECT_EQ(cfg.decoder.arch, DecoderArch::kMlp);
  EXPECT_EQ(cfg.decoder.dilations, (std::vector<int>{1, 3}));
  EXPECT_EQ(cfg.decoder.epochs, 7);
  EXPECT_EQ(cfg.refine.lambda_s, 0.5);
  ASSERT_TRUE(cfg.refine.step_size.has_value());
  EXPECT_EQ(*cfg.refine.step_size, 0.01);
  EXPECT_EQ(cfg.refine.reduction, EpsilonReduction::kMean);
  EXPECT_EQ(cfg.durations.minimum[0], 0.08);
  EXPECT_EQ(cfg.features.scales[4].dim, 9);
  EXPECT_EQ(cfg.tolerance, 0.1);
  EXPECT_EQ(cfg.budget, 0.5);
  EXPECT_EQ(cfg.seed, 12u);
  EXPECT_EQ(cfg.model_path, "/tmp/m.bin");
  // Untouched fields keep their defaults.
  EXPECT_EQ(cfg.decoder.channels, 64);
  EXPECT_EQ(cfg.refine.n_iter, 8);
}

TEST(Config, RejectsUnknownOrMalformedEntries) {
  test::TempDir dir("config_bad");
  RunConfig cfg;
  EXPECT_THROW(apply_config_file(write_file(dir, "a.ini", "[decoder]\nwidth = 3\n"), cfg), ConfigError);
  EXPECT_THROW(apply_config_file(write_file(dir, "b.ini", "[nonsense]\nx = 1\n"), cfg), ConfigError);
  EXPECT_THROW(apply_config_file(write_file(dir, "c.ini", "[refine]\nlambda = abc\n"), cfg), ConfigError);
  EXPECT_THROW(apply_config_file(write_file(dir, "d.ini", "[run]\nbudget = 2\n"), cfg), ConfigError);
  EXPECT_THROW(apply_config_file(write_file(dir, "e.ini", "[decoder]\narch = rnn\n"), cfg), ConfigError);
  EXPECT_THROW(apply_config_file(write_file(dir, "f.ini", "[decoder\n"), cfg), ConfigError);
  EXPECT_THROW(apply_config_file(dir / "missing.ini", cfg), ConfigError);
}

TEST(Config, DumpRoundTrips) {
  RunConfig cfg;
  cfg.decoder.arch = DecoderArch::kMlp;
  cfg.decoder.dilations = {1, 2, 5};
  cfg.refine.lambda = 0.125;
  cfg.refine.step_size = 0.03;
  cfg.durations.minimum[3] = 0.2;
  cfg.budget = 0.1;
  cfg.seed = 77;
  cfg.data_dir = "/data/with space";
  test::TempDir dir("config_dump");
  const std::string text = dump_config(cfg);
  RunConfig back;
  apply_config_file(write_file(dir, "dump.ini", text), back);
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(back.decoder.dilations, cfg.decoder.dilations);
  EXPECT_EQ(back.refine.lambda, 0.125);
  EXPECT_EQ(back.data_dir, cfg.data_dir);
  EXPECT_EQ(back.seed, 77u);

  const std::string defaults = dump_config(RunConfig{});
  RunConfig fresh;
  apply_config_file(write_file(dir, "defaults.ini", defaults), fresh);
  EXPECT_EQ(dump_config(fresh), defaults);
}

}  // namespace
}  // namespace topseg
