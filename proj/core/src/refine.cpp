#include "topseg/refine.hpp"

#include "topseg/error.hpp"
#include "topseg/homology.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace topseg {

namespace {

constexpr std::size_t kS1 = index_of(HeartState::kS1);
constexpr std::size_t kS2 = index_of(HeartState::kS2);

void check_shapes(const PosteriorSequence& p_hat, const TopologyTarget& target) {
  if (p_hat.values.size() != p_hat.frames * kNumStates) throw DataError("refine: malformed posterior matrix");
  if (target.r.size() != p_hat.frames || target.eta.size() != p_hat.frames) {
    throw DataError("refine: target length differs from the posterior length");
  }
}

// Gradient of refine_objective at p, written to grad.
void objective_gradient(const PosteriorSequence& p, const PosteriorSequence& p_hat, const TopologyTarget& target,
                        const RefineConfig& cfg, std::vector<double>& grad) {
  const std::size_t n = p.frames;
  grad.resize(p.values.size());
  const double* x = p.values.data();
  const double* x0 = p_hat.values.data();
  for (std::size_t t = 0; t < n; ++t) {
    double* g = grad.data() + t * kNumStates;
    const double* xt = x + t * kNumStates;
    for (std::size_t c = 0; c < kNumStates; ++c) {
      double v = 2.0 * (xt[c] - x0[t * kNumStates + c]);
      if (t > 0) v += 2.0 * cfg.lambda_s * (xt[c] - xt[c - kNumStates]);
      if (t + 1 < n) v -= 2.0 * cfg.lambda_s * (xt[c + kNumStates] - xt[c]);
      g[c] = v;
    }
    const double evt = xt[kS1] + xt[kS2];
    const double e = 2.0 * cfg.lambda_b * std::max(0.0, evt - cfg.theta_max) +
                     2.0 * cfg.lambda * target.eta[t] * (evt - target.r[t]);
    g[kS1] += e;
    g[kS2] += e;
  }
}

}  // namespace

double RefineConfig::lipschitz_bound() const {
  // Hessian blocks: fidelity 2I, smoothness 2 lambda_s times a path
  // Laplacian (norm <= 4), and rank-one event terms 2 w a a^T with |a|^2 = 2.
  return 2.0 * (1.0 + 4.0 * lambda_s + 2.0 * lambda_b + 2.0 * lambda);
}

void RefineConfig::validate() const {
  if (lambda_s < 0.0 || lambda_b < 0.0 || lambda < 0.0) throw ConfigError("refine: weights must be nonnegative");
  if (!(theta_max >= 0.0 && theta_max <= 1.0)) throw ConfigError("refine: theta_max must lie in [0, 1]");
  if (n_iter < 0) throw ConfigError("refine: n_iter must be nonnegative");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("refine: rho must lie in [0, 1)");
  if (!(norm_window > 0.0)) throw ConfigError("refine: norm_window must be positive");
  if (step_size && !(*step_size > 0.0)) throw ConfigError("refine: step_size must be positive");
}

std::vector<double> topo_raw_score(const FrameFeatureMatrix& features, const LandscapeConfig& landscape,
                                   EpsilonReduction reduction) {
  const std::size_t width = landscape.scale_width();
  if (features.dims != 3 * width) {
    throw ModelInputError("topo_target: feature width does not match the landscape configuration");
  }
  const std::size_t fine = 2 * width;
  const std::size_t g = landscape.grid_size;
  const std::size_t rows = 2 * landscape.layers;  // H0 layers then H1 layers
  std::vector<double> raw(features.frames, 0.0);
  for (std::size_t t = 0; t < features.frames; ++t) {
    const auto row = features.row(t);
    double total = 0.0;
    for (std::size_t k = 0; k < rows; ++k) {
      const float* layer = row.data() + fine + k * g;
      if (reduction == EpsilonReduction::kMax) {
        total += *std::max_element(layer, layer + g);
      } else {
        double s = 0.0;
        for (std::size_t i = 0; i < g; ++i) s += layer[i];
        total += s / static_cast<double>(g);
      }
    }
    raw[t] = total;
  }
  return raw;
}

std::vector<double> percentile_normalize(std::span<const double> raw, double frame_rate, double window_seconds) {
  const auto n = raw.size();
  const auto half = static_cast<std::size_t>(std::floor(window_seconds * frame_rate / 2.0 + 1e-9));
  std::vector<double> out(n, 0.0);
  std::vector<double> window;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t > half ? t - half : 0;
    const std::size_t hi = std::min(n, t + half + 1);
    window.assign(raw.begin() + static_cast<std::ptrdiff_t>(lo), raw.begin() + static_cast<std::ptrdiff_t>(hi));
    const double p5 = quantile_linear(window, 0.05);
    const double p95 = quantile_linear(window, 0.95);
    if (!(p95 > p5)) continue;
    out[t] = std::clamp((raw[t] - p5) / (p95 - p5), 0.0, 1.0);
  }
  return out;
}

std::vector<double> topo_target(const FrameFeatureMatrix& features, const LandscapeConfig& landscape,
                                const RefineConfig& cfg) {
  const std::vector<double> raw = topo_raw_score(features, landscape, cfg.reduction);
  return percentile_normalize(raw, features.frame_rate, cfg.norm_window);
}

std::vector<double> reliability(std::span<const double> r, const RefineConfig& cfg) {
  std::vector<double> eta(r.size());
  double ema = r.empty() ? 0.0 : r[0];
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (t > 0) ema = cfg.rho * ema + (1.0 - cfg.rho) * r[t];
    eta[t] = 1.0 / (1.0 + std::exp(-cfg.gamma * (ema - cfg.tau_thr)));
  }
  return eta;
}

TopologyTarget make_target(const FrameFeatureMatrix& features, const LandscapeConfig& landscape,
                           const RefineConfig& cfg) {
  TopologyTarget target;
  target.r = topo_target(features, landscape, cfg);
  target.eta = reliability(target.r, cfg);
  return target;
}

void simplex_project_inplace(std::span<double> v) {
  std::array<double, kNumStates> u{};
  if (v.size() != kNumStates) throw DataError("simplex_project: expected a 4-vector");
  std::copy(v.begin(), v.end(), u.begin());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < kNumStates; ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
}

std::array<double, kNumStates> simplex_project(const std::array<double, kNumStates>& v) {
  std::array<double, kNumStates> out = v;
  simplex_project_inplace(out);
  return out;
}

double refine_objective(const PosteriorSequence& p, const PosteriorSequence& p_hat, const TopologyTarget& target,
                        const RefineConfig& cfg) {
  const std::size_t n = p.frames;
  double fidelity = 0.0;
  double smooth = 0.0;
  double cap = 0.0;
  double align = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double* xt = p.values.data() + t * kNumStates;
    const double* x0 = p_hat.values.data() + t * kNumStates;
    for (std::size_t c = 0; c < kNumStates; ++c) {
      fidelity += (xt[c] - x0[c]) * (xt[c] - x0[c]);
      if (t > 0) smooth += (xt[c] - xt[c - kNumStates]) * (xt[c] - xt[c - kNumStates]);
    }
    const double evt = xt[kS1] + xt[kS2];
    const double over = std::max(0.0, evt - cfg.theta_max);
    cap += over * over;
    align += target.eta[t] * (evt - target.r[t]) * (evt - target.r[t]);
  }
  return fidelity + cfg.lambda_s * smooth + cfg.lambda_b * cap + cfg.lambda * align;
}

RefineResult refine_pgd(const PosteriorSequence& p_hat, const TopologyTarget& target, const RefineConfig& cfg,
                        const PosteriorSequence* init) {
  cfg.validate();
  check_shapes(p_hat, target);
  RefineResult result;
  PosteriorSequence& p = result.posteriors;
  p = init ? *init : p_hat;
  if (p.frames != p_hat.frames || p.values.size() != p_hat.values.size()) {
    throw DataError("refine: initial point has the wrong shape");
  }
  for (std::size_t t = 0; t < p.frames; ++t) simplex_project_inplace(p.row(t));

  const double base_step = cfg.step_size.value_or(1.0 / cfg.lipschitz_bound());
  double current = refine_objective(p, p_hat, target, cfg);
  result.objective.push_back(current);
  std::vector<double> grad;
  PosteriorSequence trial = p;
  constexpr int kMaxHalvings = 40;
  for (int it = 0; it < cfg.n_iter; ++it) {
    objective_gradient(p, p_hat, target, cfg, grad);
    double step = base_step;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      for (std::size_t i = 0; i < p.values.size(); ++i) trial.values[i] = p.values[i] - step * grad[i];
      for (std::size_t t = 0; t < trial.frames; ++t) simplex_project_inplace(trial.row(t));
      const double value = refine_objective(trial, p_hat, target, cfg);
      if (value <= current) {
        std::swap(p.values, trial.values);
        current = value;
        accepted = true;
        break;
      }
      ++result.rejected_steps;
    }
    if (!accepted) break;  // stationary to working precision
    result.objective.push_back(current);
  }
  return result;
}

}  // namespace topseg
