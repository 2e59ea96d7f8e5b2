#include "topseg/decoder.hpp"

#include "binary_io.hpp"
#include "rng.hpp"
#include "topseg/error.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace topseg {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMap = Eigen::Map<const Mat>;
using CVecMap = Eigen::Map<const Vec>;
using MatMap = Eigen::Map<Mat>;
using VecMap = Eigen::Map<Vec>;

constexpr int kClasses = static_cast<int>(kNumStates);

// A contiguous run of frames used as one training sequence.
struct Segment {
  const FrameFeatureMatrix* features;
  const LabelSequence* labels;
  std::size_t begin;
  std::size_t length;
};

int kernel_offset(int k, int kernel, int dilation) { return (k - (kernel - 1) / 2) * dilation; }

// D x len standardized input.
Mat standardized(const DecoderParams& p, const Segment& s) {
  const auto d = static_cast<Eigen::Index>(p.input_dims);
  const auto len = static_cast<Eigen::Index>(s.length);
  Eigen::Map<const Eigen::MatrixXf> raw(s.features->values.data() + s.begin * p.input_dims, d, len);
  const CVecMap mean(p.input_mean.data(), d);
  const CVecMap scale(p.input_scale.data(), d);
  return ((raw.cast<double>().colwise() - mean).array().colwise() * scale.array()).matrix();
}

struct TcnCache {
  Mat x;
  std::vector<Mat> h;  // h[0] after input projection, h[b+1] after block b
  std::vector<Mat> z;  // block pre-activations
  Mat probs;
};

struct MlpCache {
  Mat x;
  Mat z;
  Mat hidden;
  Mat probs;
};

void softmax_columns(Mat& logits) {
  for (Eigen::Index t = 0; t < logits.cols(); ++t) {
    auto col = logits.col(t);
    const double m = col.maxCoeff();
    col = (col.array() - m).exp().matrix();
    col /= col.sum();
  }
}

// Adds sum_k W_k * shift(in, o_k) to out (C x T).
void dilated_conv(const DecoderParams& p, std::size_t block, const Mat& in, Mat& out) {
  const int kernel = p.config.kernel;
  const int dil = p.config.dilations[block];
  const auto c = static_cast<Eigen::Index>(p.config.channels);
  const Eigen::Index t_len = in.cols();
  const Tensor& w = p.tensor("block" + std::to_string(block) + ".weight");
  for (int k = 0; k < kernel; ++k) {
    const int o = kernel_offset(k, kernel, dil);
    const Eigen::Index span = t_len - std::abs(o);
    if (span <= 0) continue;
    const Mat wk = CMap(w.values.data() + static_cast<std::size_t>(k * c * c), c, c);
    if (o >= 0) {
      out.leftCols(span).noalias() += wk * in.rightCols(span);
    } else {
      out.rightCols(span).noalias() += wk * in.leftCols(span);
    }
  }
}

TcnCache tcn_forward(const DecoderParams& p, Mat x) {
  const auto c = static_cast<Eigen::Index>(p.config.channels);
  const auto d = static_cast<Eigen::Index>(p.input_dims);
  TcnCache cache;
  cache.x = std::move(x);
  const Mat w_in = CMap(p.tensor("input.weight").values.data(), c, d);
  const Vec b_in = CVecMap(p.tensor("input.bias").values.data(), c);
  cache.h.push_back((w_in * cache.x).colwise() + b_in);
  for (std::size_t b = 0; b < p.config.blocks(); ++b) {
    const Vec bias = CVecMap(p.tensor("block" + std::to_string(b) + ".bias").values.data(), c);
    Mat z = bias.replicate(1, cache.h.back().cols());
    dilated_conv(p, b, cache.h.back(), z);
    Mat next = cache.h.back() + z.cwiseMax(0.0);
    cache.z.push_back(std::move(z));
    cache.h.push_back(std::move(next));
  }
  const Mat w_head = CMap(p.tensor("head.weight").values.data(), kClasses, c);
  const Vec b_head = CVecMap(p.tensor("head.bias").values.data(), kClasses);
  cache.probs = (w_head * cache.h.back()).colwise() + b_head;
  softmax_columns(cache.probs);
  return cache;
}

MlpCache mlp_forward(const DecoderParams& p, Mat x) {
  const auto h = static_cast<Eigen::Index>(p.config.mlp_hidden);
  const auto d = static_cast<Eigen::Index>(p.input_dims);
  MlpCache cache;
  cache.x = std::move(x);
  const Mat w1 = CMap(p.tensor("hidden.weight").values.data(), h, d);
  const Vec b1 = CVecMap(p.tensor("hidden.bias").values.data(), h);
  cache.z = (w1 * cache.x).colwise() + b1;
  cache.hidden = cache.z.cwiseMax(0.0);
  const Mat w2 = CMap(p.tensor("head.weight").values.data(), kClasses, h);
  const Vec b2 = CVecMap(p.tensor("head.bias").values.data(), kClasses);
  cache.probs = (w2 * cache.hidden).colwise() + b2;
  softmax_columns(cache.probs);
  return cache;
}

std::size_t tensor_index(const DecoderParams& p, const std::string& name) {
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    if (p.tensors[i].name == name) return i;
  }
  throw ModelInputError("decoder: missing tensor " + name);
}

// Cross-entropy summed over the segment; adds scale * gradient.
double segment_loss(const DecoderParams& p, const Segment& s, double scale,
                    std::vector<std::vector<double>>* grad) {
  if (s.labels->states.size() < s.begin + s.length) throw DataError("decoder: labels shorter than features");
  const Mat x = standardized(p, s);
  const auto len = static_cast<Eigen::Index>(s.length);
  Mat dlogits;
  double loss = 0.0;
  auto head_terms = [&](const Mat& probs) {
    dlogits = probs;
    for (Eigen::Index t = 0; t < len; ++t) {
      const auto y = static_cast<Eigen::Index>(index_of(s.labels->states[s.begin + static_cast<std::size_t>(t)]));
      loss -= std::log(std::max(probs(y, t), 1e-300));
      dlogits(y, t) -= 1.0;
    }
    dlogits *= scale;
  };
  auto grad_map = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    return MatMap((*grad)[tensor_index(p, name)].data(), rows, cols);
  };

  if (p.config.arch == DecoderArch::kMlp) {
    MlpCache cache = mlp_forward(p, x);
    head_terms(cache.probs);
    if (!grad) return loss;
    const auto h = static_cast<Eigen::Index>(p.config.mlp_hidden);
    const auto d = static_cast<Eigen::Index>(p.input_dims);
    grad_map("head.weight", kClasses, h) += Mat(dlogits * cache.hidden.transpose());
    grad_map("head.bias", kClasses, 1) += Mat(dlogits.rowwise().sum());
    const Mat w2 = CMap(p.tensor("head.weight").values.data(), kClasses, h);
    Mat dz = (w2.transpose() * dlogits).cwiseProduct((cache.z.array() > 0.0).cast<double>().matrix());
    grad_map("hidden.weight", h, d) += Mat(dz * cache.x.transpose());
    grad_map("hidden.bias", h, 1) += Mat(dz.rowwise().sum());
    return loss;
  }

  TcnCache cache = tcn_forward(p, x);
  head_terms(cache.probs);
  if (!grad) return loss;
  const auto c = static_cast<Eigen::Index>(p.config.channels);
  const auto d = static_cast<Eigen::Index>(p.input_dims);
  grad_map("head.weight", kClasses, c) += Mat(dlogits * cache.h.back().transpose());
  grad_map("head.bias", kClasses, 1) += Mat(dlogits.rowwise().sum());
  const Mat w_head = CMap(p.tensor("head.weight").values.data(), kClasses, c);
  Mat dh = w_head.transpose() * dlogits;

  const int kernel = p.config.kernel;
  for (std::size_t b = p.config.blocks(); b-- > 0;) {
    const Mat& in = cache.h[b];
    const Mat dz = dh.cwiseProduct((cache.z[b].array() > 0.0).cast<double>().matrix());
    const std::string prefix = "block" + std::to_string(b);
    grad_map(prefix + ".bias", c, 1) += Mat(dz.rowwise().sum());
    auto& gw = (*grad)[tensor_index(p, prefix + ".weight")];
    const Tensor& w = p.tensor(prefix + ".weight");
    Mat dh_in = dh;  // residual path
    const int dil = p.config.dilations[b];
    for (int k = 0; k < kernel; ++k) {
      const int o = kernel_offset(k, kernel, dil);
      const Eigen::Index span = len - std::abs(o);
      if (span <= 0) continue;
      MatMap gk(gw.data() + static_cast<std::size_t>(k * c * c), c, c);
      const Mat wk = CMap(w.values.data() + static_cast<std::size_t>(k * c * c), c, c);
      if (o >= 0) {
        gk += Mat(dz.leftCols(span) * in.rightCols(span).transpose());
        dh_in.rightCols(span).noalias() += wk.transpose() * dz.leftCols(span);
      } else {
        gk += Mat(dz.rightCols(span) * in.leftCols(span).transpose());
        dh_in.leftCols(span).noalias() += wk.transpose() * dz.rightCols(span);
      }
    }
    dh = std::move(dh_in);
  }
  grad_map("input.weight", c, d) += Mat(dh * cache.x.transpose());
  grad_map("input.bias", c, 1) += Mat(dh.rowwise().sum());
  return loss;
}

std::vector<std::vector<double>> zero_like(const DecoderParams& p) {
  std::vector<std::vector<double>> g;
  g.reserve(p.tensors.size());
  for (const auto& t : p.tensors) g.emplace_back(t.values.size(), 0.0);
  return g;
}

std::vector<Segment> whole_sequences(const DecoderParams& p, std::span<const TrainingExample> data) {
  std::vector<Segment> out;
  for (const auto& ex : data) {
    if (ex.features->dims != p.input_dims) throw ModelInputError("decoder: feature width mismatch");
    if (ex.labels->size() != ex.features->frames) throw DataError("decoder: labels not frame-aligned");
    if (ex.features->frames > 0) out.push_back({ex.features, ex.labels, 0, ex.features->frames});
  }
  return out;
}

double mean_loss(const DecoderParams& p, const std::vector<Segment>& segs) {
  double loss = 0.0;
  std::size_t frames = 0;
  for (const auto& s : segs) {
    loss += segment_loss(p, s, 1.0, nullptr);
    frames += s.length;
  }
  return frames ? loss / static_cast<double>(frames) : 0.0;
}

std::string group_of(const std::string& name) {
  if (name.rfind("head.", 0) == 0) return "head";
  if (name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0) return "bias";
  return "conv";
}

}  // namespace

int DecoderConfig::receptive_field() const {
  if (arch == DecoderArch::kMlp) return 1;
  return 1 + (kernel - 1) * std::accumulate(dilations.begin(), dilations.end(), 0);
}

void DecoderConfig::validate() const {
  if (channels < 1 || mlp_hidden < 1) throw ConfigError("decoder: channel counts must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("decoder: kernel must be odd and positive");
  for (int d : dilations) {
    if (d < 1) throw ConfigError("decoder: dilations must be positive");
  }
  if (!(learning_rate > 0.0) || momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("decoder: need learning_rate > 0 and momentum in [0, 1)");
  }
  if (epochs < 1 || batch < 1 || chunk_frames < 1 || patience < 1) {
    throw ConfigError("decoder: epochs, batch, chunk_frames and patience must be positive");
  }
}

Tensor& DecoderParams::tensor(const std::string& name) { return tensors[tensor_index(*this, name)]; }

const Tensor& DecoderParams::tensor(const std::string& name) const {
  return tensors[tensor_index(*this, name)];
}

std::size_t DecoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

DecoderParams init_params(const DecoderConfig& cfg, std::size_t input_dims, std::uint64_t seed) {
  cfg.validate();
  if (input_dims == 0) throw ConfigError("decoder: input width must be positive");
  DecoderParams p;
  p.config = cfg;
  p.input_dims = input_dims;
  p.input_mean.assign(input_dims, 0.0);
  p.input_scale.assign(input_dims, 1.0);
  detail::Rng rng(seed);
  auto weights = [&](const std::string& name, std::size_t count, std::size_t fan_in, double gain) {
    Tensor t{name, std::vector<double>(count)};
    const double sd = gain * std::sqrt(1.0 / static_cast<double>(fan_in));
    for (double& v : t.values) v = sd * rng.normal();
    p.tensors.push_back(std::move(t));
  };
  auto bias = [&](const std::string& name, std::size_t count) {
    p.tensors.push_back({name, std::vector<double>(count, 0.0)});
  };
  const auto d = input_dims;
  if (cfg.arch == DecoderArch::kMlp) {
    const auto h = static_cast<std::size_t>(cfg.mlp_hidden);
    weights("hidden.weight", h * d, d, std::sqrt(2.0));
    bias("hidden.bias", h);
    weights("head.weight", kNumStates * h, h, 1.0);
    bias("head.bias", kNumStates);
  } else {
    const auto c = static_cast<std::size_t>(cfg.channels);
    const auto k = static_cast<std::size_t>(cfg.kernel);
    weights("input.weight", c * d, d, 1.0);
    bias("input.bias", c);
    for (std::size_t b = 0; b < cfg.blocks(); ++b) {
      // Residual branches start small so the stack begins near identity.
      weights("block" + std::to_string(b) + ".weight", k * c * c, k * c, 0.5 * std::sqrt(2.0));
      bias("block" + std::to_string(b) + ".bias", c);
    }
    weights("head.weight", kNumStates * c, c, 1.0);
    bias("head.bias", kNumStates);
  }
  return p;
}

void zero_params(DecoderParams& params) {
  for (auto& t : params.tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
}

PosteriorSequence forward(const DecoderParams& params, const FrameFeatureMatrix& features) {
  if (features.dims != params.input_dims) {
    throw ModelInputError("decoder: model expects " + std::to_string(params.input_dims) +
                          " feature columns, got " + std::to_string(features.dims));
  }
  PosteriorSequence out;
  out.frames = features.frames;
  out.frame_rate = features.frame_rate;
  out.values.resize(features.frames * kNumStates);
  if (features.frames == 0) return out;
  const Segment s{&features, nullptr, 0, features.frames};
  const Mat x = standardized(params, s);
  const Mat probs = params.config.arch == DecoderArch::kMlp ? mlp_forward(params, x).probs
                                                             : tcn_forward(params, x).probs;
  MatMap(out.values.data(), kClasses, static_cast<Eigen::Index>(features.frames)) = probs;
  return out;
}

double loss_and_gradient(const DecoderParams& params, std::span<const TrainingExample> batch,
                         std::vector<std::vector<double>>* gradient) {
  const std::vector<Segment> segs = whole_sequences(params, batch);
  std::size_t frames = 0;
  for (const auto& s : segs) frames += s.length;
  if (frames == 0) throw DataError("decoder: empty batch");
  if (gradient) *gradient = zero_like(params);
  const double scale = 1.0 / static_cast<double>(frames);
  double loss = 0.0;
  for (const auto& s : segs) loss += segment_loss(params, s, scale, gradient);
  return loss * scale;
}

TrainResult train(std::span<const TrainingExample> data, const DecoderConfig& cfg,
                  std::span<const TrainingExample> validation) {
  cfg.validate();
  if (data.empty()) throw DataError("train: no training recordings");
  const std::size_t dims = data.front().features->dims;
  TrainResult result;
  result.params = init_params(cfg, dims, cfg.seed);
  DecoderParams& p = result.params;

  // Standardization statistics over every training frame.
  std::vector<double> sum(dims, 0.0);
  std::vector<double> sq(dims, 0.0);
  std::size_t total = 0;
  for (const auto& ex : data) {
    for (std::size_t t = 0; t < ex.features->frames; ++t) {
      const auto row = ex.features->row(t);
      for (std::size_t k = 0; k < dims; ++k) {
        sum[k] += row[k];
        sq[k] += static_cast<double>(row[k]) * row[k];
      }
    }
    total += ex.features->frames;
  }
  if (total == 0) throw DataError("train: training set has no frames");
  for (std::size_t k = 0; k < dims; ++k) {
    const double mean = sum[k] / static_cast<double>(total);
    const double var = std::max(0.0, sq[k] / static_cast<double>(total) - mean * mean);
    p.input_mean[k] = mean;
    p.input_scale[k] = 1.0 / std::sqrt(var + 1e-4);
  }

  std::vector<Segment> segments;
  for (const Segment& whole : whole_sequences(p, data)) {
    const auto chunk = static_cast<std::size_t>(cfg.chunk_frames);
    if (whole.length <= chunk) {
      segments.push_back(whole);
      continue;
    }
    for (std::size_t b = 0; b + chunk <= whole.length; b += chunk) {
      segments.push_back({whole.features, whole.labels, b, chunk});
    }
  }
  const std::vector<Segment> val_segments = whole_sequences(p, validation);

  detail::Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::vector<double>> velocity = zero_like(p);
  std::vector<std::vector<double>> grad = zero_like(p);
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_val = std::numeric_limits<double>::infinity();
  DecoderParams best = p;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_frames = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::size_t frames = 0;
      for (std::size_t i = start; i < stop; ++i) frames += segments[order[i]].length;
      for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(frames);
      double loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) loss += segment_loss(p, segments[order[i]], scale, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("train: loss became non-finite at epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += loss;
      epoch_frames += frames;

      double norm_sq = 0.0;
      for (const auto& g : grad) {
        for (double v : g) norm_sq += v * v;
      }
      const double norm = std::sqrt(norm_sq);
      const double clip = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;
      for (std::size_t t = 0; t < p.tensors.size(); ++t) {
        auto& values = p.tensors[t].values;
        auto& vel = velocity[t];
        const auto& g = grad[t];
        for (std::size_t k = 0; k < values.size(); ++k) {
          vel[k] = cfg.momentum * vel[k] - cfg.learning_rate * clip * g[k];
          values[k] += vel[k];
        }
      }
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(epoch_frames));

    if (!val_segments.empty()) {
      const double val = mean_loss(p, val_segments);
      if (!std::isfinite(val)) {
        throw TrainingError("train: validation loss became non-finite at epoch " + std::to_string(epoch + 1));
      }
      result.validation_loss.push_back(val);
      if (val < best_val) {
        best_val = val;
        best = p;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        result.stopped_early = epoch + 1 < cfg.epochs;
        break;
      }
    }
  }
  if (!val_segments.empty()) {
    p = std::move(best);
  } else {
    result.best_epoch = static_cast<int>(result.train_loss.size()) - 1;
  }

  const auto& tl = result.train_loss;
  const std::size_t w = std::min<std::size_t>(5, tl.size());
  const double head = std::accumulate(tl.begin(), tl.begin() + static_cast<std::ptrdiff_t>(w), 0.0) / w;
  const double tail = std::accumulate(tl.end() - static_cast<std::ptrdiff_t>(w), tl.end(), 0.0) / w;
  if (tl.size() > 1 && !(tail < head)) {
    result.warnings.push_back("training loss did not decrease (smoothed first vs last epochs)");
  }
  return result;
}

GradCheckReport grad_check(const DecoderParams& params, std::span<const TrainingExample> batch, double step) {
  std::vector<std::vector<double>> analytic;
  loss_and_gradient(params, batch, &analytic);
  DecoderParams probe = params;
  GradCheckReport report;
  for (std::size_t t = 0; t < probe.tensors.size(); ++t) {
    auto& values = probe.tensors[t].values;
    double worst = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + step;
      const double up = loss_and_gradient(probe, batch, nullptr);
      values[k] = saved - step;
      const double down = loss_and_gradient(probe, batch, nullptr);
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[t][k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-7});
      worst = std::max(worst, rel);
    }
    const std::string& name = probe.tensors[t].name;
    report.per_tensor[name] = worst;
    auto& g = report.per_group[group_of(name)];
    g = std::max(g, worst);
    report.max_relative_error = std::max(report.max_relative_error, worst);
  }
  return report;
}

namespace {

using nlohmann::json;
constexpr char kModelMagic[5] = {'T', 'S', 'E', 'G', 'M'};

}  // namespace

void save_model(const std::filesystem::path& path, const DecoderParams& params) {
  const DecoderConfig& c = params.config;
  json tensors = json::array();
  for (const auto& t : params.tensors) tensors.push_back({{"name", t.name}, {"size", t.values.size()}});
  const json meta = {{"arch", c.arch == DecoderArch::kMlp ? "mlp" : "tcn"},
                     {"channels", c.channels},
                     {"kernel", c.kernel},
                     {"dilations", c.dilations},
                     {"mlp_hidden", c.mlp_hidden},
                     {"learning_rate", c.learning_rate},
                     {"momentum", c.momentum},
                     {"clip_norm", c.clip_norm},
                     {"epochs", c.epochs},
                     {"batch", c.batch},
                     {"chunk_frames", c.chunk_frames},
                     {"patience", c.patience},
                     {"seed", c.seed},
                     {"input_dims", params.input_dims},
                     {"tensors", tensors}};
  const std::string text = meta.dump();
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("save_model: cannot open " + tmp.string());
    out.write(kModelMagic, 5);
    detail::put_u32(out, kModelVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    detail::put_array(out, params.input_mean);
    detail::put_array(out, params.input_scale);
    for (const auto& t : params.tensors) detail::put_array(out, t.values);
    if (!out) throw DataError("save_model: write failed");
  }
  std::filesystem::rename(tmp, path);
}

DecoderParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("model file not found: " + path.string());
  char magic[5];
  std::uint32_t version = 0;
  std::uint32_t len = 0;
  if (!in.read(magic, 5) || std::memcmp(magic, kModelMagic, 5) != 0 || !detail::get_u32(in, version) ||
      version != kModelVersion || !detail::get_u32(in, len) || len > (1u << 24)) {
    throw ModelInputError("not a topseg model file: " + path.string());
  }
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw ModelInputError("truncated model header: " + path.string());
  DecoderParams p;
  try {
    const json meta = json::parse(text);
    DecoderConfig& c = p.config;
    c.arch = meta.at("arch").get<std::string>() == "mlp" ? DecoderArch::kMlp : DecoderArch::kTcn;
    c.channels = meta.at("channels").get<int>();
    c.kernel = meta.at("kernel").get<int>();
    c.dilations = meta.at("dilations").get<std::vector<int>>();
    c.mlp_hidden = meta.at("mlp_hidden").get<int>();
    c.learning_rate = meta.at("learning_rate").get<double>();
    c.momentum = meta.at("momentum").get<double>();
    c.clip_norm = meta.at("clip_norm").get<double>();
    c.epochs = meta.at("epochs").get<int>();
    c.batch = meta.at("batch").get<int>();
    c.chunk_frames = meta.at("chunk_frames").get<int>();
    c.patience = meta.at("patience").get<int>();
    c.seed = meta.at("seed").get<std::uint64_t>();
    p.input_dims = meta.at("input_dims").get<std::size_t>();
    for (const auto& t : meta.at("tensors")) {
      p.tensors.push_back({t.at("name").get<std::string>(), std::vector<double>(t.at("size").get<std::size_t>())});
    }
  } catch (const json::exception& e) {
    throw ModelInputError("bad model metadata in " + path.string() + ": " + e.what());
  }
  if (p.input_dims > (1u << 24) || !detail::get_array(in, p.input_mean, p.input_dims) ||
      !detail::get_array(in, p.input_scale, p.input_dims)) {
    throw ModelInputError("truncated model payload: " + path.string());
  }
  for (auto& t : p.tensors) {
    if (!detail::get_array(in, t.values, t.values.size())) {
      throw ModelInputError("truncated model payload: " + path.string());
    }
  }
  return p;
}

}  // namespace topseg
