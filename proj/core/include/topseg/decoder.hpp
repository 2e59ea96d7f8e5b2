#pragma once

#include "topseg/features.hpp"
#include "topseg/labels.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace topseg {

// T x 4 row-stochastic posteriors, columns in HeartState order.
struct PosteriorSequence {
  std::vector<double> values;
  std::size_t frames{0};
  double frame_rate{60.0};

  std::span<const double> row(std::size_t t) const { return {values.data() + t * kNumStates, kNumStates}; }
  std::span<double> row(std::size_t t) { return {values.data() + t * kNumStates, kNumStates}; }
};

enum class DecoderArch { kTcn, kMlp };

struct DecoderConfig {
  DecoderArch arch{DecoderArch::kTcn};
  int channels{64};
  int kernel{3};
  std::vector<int> dilations{1, 2, 4, 8};
  int mlp_hidden{128};

  double learning_rate{0.02};
  double momentum{0.9};
  double clip_norm{5.0};
  int epochs{60};
  int batch{4};
  int chunk_frames{600};
  int patience{10};
  std::uint64_t seed{1};

  std::size_t blocks() const { return dilations.size(); }
  // 1 + (kernel - 1) * sum(dilations) for the TCN; 1 for the MLP.
  int receptive_field() const;
  void validate() const;
};

struct Tensor {
  std::string name;
  std::vector<double> values;
};

struct DecoderParams {
  DecoderConfig config;
  std::size_t input_dims{0};
  // Per-feature standardization fixed from the training set.
  std::vector<double> input_mean;
  std::vector<double> input_scale;
  std::vector<Tensor> tensors;

  Tensor& tensor(const std::string& name);
  const Tensor& tensor(const std::string& name) const;
  std::size_t parameter_count() const;
};

// Random He-style weights and zero biases; identity standardization.
DecoderParams init_params(const DecoderConfig& cfg, std::size_t input_dims, std::uint64_t seed);

// Sets every trainable value to zero.
void zero_params(DecoderParams& params);

// Softmax posteriors for every frame. Throws ModelInputError when the
// feature width differs from params.input_dims.
PosteriorSequence forward(const DecoderParams& params, const FrameFeatureMatrix& features);

struct TrainingExample {
  const FrameFeatureMatrix* features{nullptr};
  const LabelSequence* labels{nullptr};
};

// Mean framewise cross-entropy over all frames in `batch`; when `gradient`
// is non-null it receives d(loss)/d(tensor) in tensor order.
double loss_and_gradient(const DecoderParams& params, std::span<const TrainingExample> batch,
                         std::vector<std::vector<double>>* gradient);

struct TrainResult {
  DecoderParams params;
  std::vector<double> train_loss;       // per epoch
  std::vector<double> validation_loss;  // per epoch, empty without validation data
  int best_epoch{-1};
  bool stopped_early{false};
  std::vector<std::string> warnings;
};

// Mini-batch SGD with momentum on framewise cross-entropy. Sequences are cut
// into non-overlapping chunk_frames segments (remainders dropped unless the
// sequence is shorter than one segment). With validation data, keeps the
// best epoch and stops after `patience` epochs without improvement.
TrainResult train(std::span<const TrainingExample> data, const DecoderConfig& cfg,
                  std::span<const TrainingExample> validation = {});

struct GradCheckReport {
  double max_relative_error{0.0};
  std::map<std::string, double> per_tensor;
  std::map<std::string, double> per_group;  // conv / bias / head
};

// Central finite differences against loss_and_gradient. Relative error is
// |a - n| / max(|a|, |n|, 1e-7).
GradCheckReport grad_check(const DecoderParams& params, std::span<const TrainingExample> batch,
                           double step = 1e-5);

// "TSEGM" container: magic, u32 version, u32 metadata length, JSON metadata,
// float64 standardization vectors and tensors.
void save_model(const std::filesystem::path& path, const DecoderParams& params);
DecoderParams load_model(const std::filesystem::path& path);

inline constexpr std::uint32_t kModelVersion = 1;

}  // namespace topseg
