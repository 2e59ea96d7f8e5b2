#pragma once

#include "topseg/decoder.hpp"
#include "topseg/features.hpp"
#include "topseg/labels.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topseg {

// How a landscape layer is reduced over its grid before summing layers.
enum class EpsilonReduction { kMax, kMean };

struct RefineConfig {
  double lambda_s{1e-2};
  double lambda_b{5e-2};
  double lambda{5e-2};
  double theta_max{0.65};
  int n_iter{8};
  double gamma{2.0};
  double tau_thr{0.5};
  double rho{0.90};
  double norm_window{2.0};  // seconds
  EpsilonReduction reduction{EpsilonReduction::kMax};
  // Fixed step; defaults to 1 / lipschitz_bound().
  std::optional<double> step_size;

  // Upper bound on the Lipschitz constant of the objective gradient.
  double lipschitz_bound() const;
  void validate() const;
};

// Topology guide and its reliability, both in [0, 1] per frame.
struct TopologyTarget {
  std::vector<double> r;
  std::vector<double> eta;
};

// Per frame: sum over layers of the reduced fine-scale H0 and H1 landscapes.
std::vector<double> topo_raw_score(const FrameFeatureMatrix& features, const LandscapeConfig& landscape,
                                   EpsilonReduction reduction);

// clip((x - p5) / (p95 - p5), 0, 1) with percentiles over a centered window
// of window_seconds; frames whose window has p95 == p5 map to 0.
std::vector<double> percentile_normalize(std::span<const double> raw, double frame_rate,
                                         double window_seconds);

std::vector<double> topo_target(const FrameFeatureMatrix& features, const LandscapeConfig& landscape,
                                const RefineConfig& cfg);

// sigmoid(gamma * (ema(t) - tau_thr)), ema(t) = rho * ema(t-1) + (1 - rho) * r(t), ema(0) = r(0).
std::vector<double> reliability(std::span<const double> r, const RefineConfig& cfg);

TopologyTarget make_target(const FrameFeatureMatrix& features, const LandscapeConfig& landscape,
                           const RefineConfig& cfg);

// Euclidean projection onto the probability simplex (sort and threshold).
std::array<double, kNumStates> simplex_project(const std::array<double, kNumStates>& v);
void simplex_project_inplace(std::span<double> v);

// ||P - P_hat||^2 + lambda_s sum ||P(t) - P(t-1)||^2 + lambda_b sum (P_evt - theta)_+^2
// + lambda sum eta (P_evt - r)^2 with P_evt = P_S1 + P_S2.
double refine_objective(const PosteriorSequence& p, const PosteriorSequence& p_hat,
                        const TopologyTarget& target, const RefineConfig& cfg);

struct RefineResult {
  PosteriorSequence posteriors;
  // Objective at the start and after every accepted step.
  std::vector<double> objective;
  int rejected_steps{0};
};

// Monotone projected gradient descent from `init` (default P_hat). A step
// that raises the objective is retried with half the step size.
RefineResult refine_pgd(const PosteriorSequence& p_hat, const TopologyTarget& target, const RefineConfig& cfg,
                        const PosteriorSequence* init = nullptr);

struct DurationConfig {
  // Seconds, indexed by HeartState.
  std::array<double, kNumStates> minimum{0.050, 0.100, 0.040, 0.150};

  std::array<int, kNumStates> frames(double frame_rate) const;
  void validate() const;
};

struct DecodeResult {
  LabelSequence labels;
  bool fallback{false};
  std::string warning;
};

// Maximum log-likelihood path over the cyclic order S1 -> systole -> S2 ->
// diastole with minimum run lengths. The first run counts as already
// satisfied and the last run may be cut short. Sequences shorter than one
// minimum cycle fall back to framewise argmax.
DecodeResult constrained_decode(const PosteriorSequence& p, const DurationConfig& durations);

LabelSequence argmax_decode(const PosteriorSequence& p);

}  // namespace topseg
