#include "test_util.hpp"
#include "topseg/error.hpp"
#include "topseg/refine.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace topseg {
namespace {

std::array<double, 4> random_simplex_point(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::array<double, 4> v{};
  double s = 0.0;
  for (double& x : v) s += (x = e(rng));
  for (double& x : v) x /= s;
  return v;
}

PosteriorSequence random_posteriors(std::mt19937_64& rng, std::size_t frames) {
  PosteriorSequence p;
  p.frames = frames;
  for (std::size_t t = 0; t < frames; ++t) {
    const auto v = random_simplex_point(rng);
    p.values.insert(p.values.end(), v.begin(), v.end());
  }
  return p;
}

TopologyTarget random_target(std::mt19937_64& rng, std::size_t frames) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TopologyTarget tt;
  for (std::size_t t = 0; t < frames; ++t) {
    tt.r.push_back(u(rng));
    tt.eta.push_back(u(rng));
  }
  return tt;
}

// Projection by bisection on the threshold: sum(max(v - theta, 0)) = 1.
std::array<double, 4> project_by_bisection(const std::array<double, 4>& v) {
  double lo = *std::min_element(v.begin(), v.end()) - 1.0;
  double hi = *std::max_element(v.begin(), v.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double x : v) s += std::max(x - mid, 0.0);
    (s > 1.0 ? lo : hi) = mid;
  }
  std::array<double, 4> out{};
  for (std::size_t c = 0; c < 4; ++c) out[c] = std::max(v[c] - 0.5 * (lo + hi), 0.0);
  return out;
}

// Reference solver: plain projected gradient with a hand-written gradient
// and bisection projection, run for a fixed number of iterations.
PosteriorSequence reference_solution(const PosteriorSequence& p_hat, const TopologyTarget& tt,
                                     const RefineConfig& cfg, int iterations, const PosteriorSequence* start = nullptr) {
  const std::size_t n = p_hat.frames;
  const double step = 1.0 / (2.0 * (1.0 + 4.0 * cfg.lambda_s + 2.0 * cfg.lambda_b + 2.0 * cfg.lambda));
  std::vector<double> x = start ? start->values : p_hat.values;
  std::vector<double> g(x.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t i = t * 4 + c;
        double v = 2.0 * (x[i] - p_hat.values[i]);
        if (t > 0) v += 2.0 * cfg.lambda_s * (x[i] - x[i - 4]);
        if (t + 1 < n) v += 2.0 * cfg.lambda_s * (x[i] - x[i + 4]);
        g[i] = v;
      }
      const double evt = x[t * 4] + x[t * 4 + 2];
      const double e = 2.0 * cfg.lambda_b * std::max(0.0, evt - cfg.theta_max) + 2.0 * cfg.lambda * tt.eta[t] * (evt - tt.r[t]);
      g[t * 4] += e;
      g[t * 4 + 2] += e;
    }
    for (std::size_t t = 0; t < n; ++t) {
      std::array<double, 4> row{};
      for (std::size_t c = 0; c < 4; ++c) row[c] = x[t * 4 + c] - step * g[t * 4 + c];
      row = project_by_bisection(row);
      std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(t * 4));
    }
  }
  PosteriorSequence out = p_hat;
  out.values = x;
  return out;
}

double max_abs_diff(const PosteriorSequence& a, const PosteriorSequence& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

TEST(Simplex, Examples) {
  const auto a = simplex_project({0.5, 0.5, 0.5, 0.5});
  for (double v : a) EXPECT_DOUBLE_EQ(v, 0.25);
  const std::array<double, 4> on{0.1, 0.2, 0.3, 0.4};
  const auto b = simplex_project(on);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(b[c], on[c], 1e-15);
  EXPECT_EQ(simplex_project({10, 0, 0, 0}), (std::array<double, 4>{1, 0, 0, 0}));
}

TEST(Simplex, MatchesBisectionAndKkt) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::array<double, 4> v{};
    for (double& x : v) x = g(rng);
    const auto p = simplex_project(v);
    const auto q = project_by_bisection(v);
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_GE(p[c], 0.0);
      EXPECT_NEAR(p[c], q[c], 1e-12);
      s += p[c];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    // KKT: v - p = theta on the support, v - p <= theta off it.
    double theta = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      if (p[c] > 0.0) theta = v[c] - p[c];
    }
    for (std::size_t c = 0; c < 4; ++c) {
      if (p[c] > 0.0) {
        EXPECT_NEAR(v[c] - p[c], theta, 1e-12);
      } else {
        EXPECT_LE(v[c], theta + 1e-12);
      }
    }
  }
}

TEST(Reliability, Examples) {
  RefineConfig cfg;
  const std::vector<double> at_tau(5, 0.5);
  for (double e : reliability(at_tau, cfg)) EXPECT_DOUBLE_EQ(e, 0.5);
  const std::vector<double> ones(7, 1.0);
  for (double e : reliability(ones, cfg)) EXPECT_NEAR(e, 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(reliability(ones, cfg)[0], 0.7311, 1e-4);
  cfg.rho = 0.0;
  const std::vector<double> r{0.1, 0.9, 0.3, 0.7};
  const auto eta = reliability(r, cfg);
  for (std::size_t t = 0; t < r.size(); ++t) EXPECT_DOUBLE_EQ(eta[t], 1.0 / (1.0 + std::exp(-2.0 * (r[t] - 0.5))));
}

TEST(Reliability, EmaRecursion) {
  RefineConfig cfg;
  std::mt19937_64 rng(2);
  const auto r = test::random_vector(rng, 50, 0.0, 1.0);
  const auto eta = reliability(r, cfg);
  double ema = r[0];
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (t > 0) ema = 0.9 * ema + 0.1 * r[t];
    EXPECT_NEAR(eta[t], 1.0 / (1.0 + std::exp(-2.0 * (ema - 0.5))), 1e-15);
    EXPECT_GT(eta[t], 0.0);
    EXPECT_LT(eta[t], 1.0);
  }
}

TEST(PercentileNormalize, ConstantAndEndpoints) {
  const std::vector<double> flat(100, 3.0);
  for (double v : percentile_normalize(flat, 60.0, 2.0)) EXPECT_EQ(v, 0.0);

  // 11 values 0..10 in one window (half width 5 at 5 Hz over 2 s).
  std::vector<double> ramp(11);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  const auto r = percentile_normalize(ramp, 5.0, 2.0);
  // Center frame's window is the whole ramp: p5 = 0.5, p95 = 9.5.
  EXPECT_DOUBLE_EQ(r[5], (5.0 - 0.5) / 9.0);
  std::vector<double> spike(11, 0.0);
  spike[5] = 1.0;
  spike[6] = 2.0;
  const auto s = percentile_normalize(spike, 5.0, 2.0);
  for (double v : s) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(s[6], 1.0);
}

TEST(TopoTarget, ZeroLandscapesGiveZero) {
  FrameFeatureMatrix fm;
  fm.frames = 120;
  fm.dims = 3840;
  fm.values.assign(120 * 3840, 0.0f);
  const TopologyTarget tt = make_target(fm, LandscapeConfig{}, RefineConfig{});
  for (double v : tt.r) EXPECT_EQ(v, 0.0);
  for (double e : tt.eta) EXPECT_NEAR(e, 1.0 / (1.0 + std::exp(1.0)), 1e-15);
}

TEST(TopoTarget, RawScoreSumsFineLayerPeaks) {
  const LandscapeConfig lc{2, 4, 0.95};  // width 16 per scale, fine block at 32
  FrameFeatureMatrix fm;
  fm.frames = 2;
  fm.dims = 48;
  fm.values.assign(96, 0.0f);
  // Frame 1: H0 layer 0 peaks at 3, H1 layer 1 at 2, plus noise in the meso block.
  fm.values[48 + 32 + 1] = 3.0f;
  fm.values[48 + 32 + 2] = 1.0f;
  fm.values[48 + 32 + 12 + 3] = 2.0f;
  fm.values[48 + 20] = 50.0f;
  const auto mx = topo_raw_score(fm, lc, EpsilonReduction::kMax);
  EXPECT_EQ(mx[0], 0.0);
  EXPECT_EQ(mx[1], 5.0);
  const auto mean = topo_raw_score(fm, lc, EpsilonReduction::kMean);
  EXPECT_DOUBLE_EQ(mean[1], (4.0 + 2.0) / 4.0);
  fm.dims = 40;
  EXPECT_THROW(topo_raw_score(fm, lc, EpsilonReduction::kMax), ModelInputError);
}

TEST(RefineConfig, DefaultsAndBound) {
  const RefineConfig cfg;
  EXPECT_EQ(cfg.lambda_s, 1e-2);
  EXPECT_EQ(cfg.lambda_b, 5e-2);
  EXPECT_EQ(cfg.lambda, 5e-2);
  EXPECT_EQ(cfg.theta_max, 0.65);
  EXPECT_EQ(cfg.n_iter, 8);
  EXPECT_EQ(cfg.gamma, 2.0);
  EXPECT_EQ(cfg.tau_thr, 0.5);
  EXPECT_EQ(cfg.rho, 0.90);
  EXPECT_EQ(cfg.norm_window, 2.0);
}

TEST(RefineConfig, LipschitzBoundCoversHessian) {
  // Hessian with every term active (cap on, eta = 1) for T frames.
  for (const auto& [ls, lb, l] : {std::tuple{1e-2, 5e-2, 5e-2}, std::tuple{0.0, 1.0, 1.0}, std::tuple{3.0, 0.5, 2.0}}) {
    RefineConfig cfg;
    cfg.lambda_s = ls;
    cfg.lambda_b = lb;
    cfg.lambda = l;
    const int T = 40;
    Eigen::MatrixXd H = 2.0 * Eigen::MatrixXd::Identity(4 * T, 4 * T);
    for (int t = 0; t + 1 < T; ++t) {
      for (int c = 0; c < 4; ++c) {
        const int i = 4 * t + c;
        const int j = i + 4;
        H(i, i) += 2 * ls;
        H(j, j) += 2 * ls;
        H(i, j) -= 2 * ls;
        H(j, i) -= 2 * ls;
      }
    }
    for (int t = 0; t < T; ++t) {
      for (int a : {0, 2}) {
        for (int b : {0, 2}) H(4 * t + a, 4 * t + b) += 2 * (lb + l);
      }
    }
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().maxCoeff();
    EXPECT_LE(top, cfg.lipschitz_bound() + 1e-12);
    EXPECT_GE(top, 0.9 * cfg.lipschitz_bound());
  }
}

TEST(RefinePgd, NoPenaltiesKeepsInput) {
  std::mt19937_64 rng(3);
  const auto p_hat = random_posteriors(rng, 30);
  RefineConfig cfg;
  cfg.lambda_s = cfg.lambda_b = cfg.lambda = 0.0;
  const auto out = refine_pgd(p_hat, random_target(rng, 30), cfg);
  EXPECT_LT(max_abs_diff(out.posteriors, p_hat), 1e-15);
}

TEST(RefinePgd, StrongSmoothingApproachesTemporalMean) {
  std::mt19937_64 rng(4);
  const std::size_t T = 5;
  const auto p_hat = random_posteriors(rng, T);
  RefineConfig cfg;
  cfg.lambda_s = 1e3;
  cfg.lambda_b = cfg.lambda = 0.0;
  cfg.n_iter = 100000;
  const auto out = refine_pgd(p_hat, random_target(rng, T), cfg).posteriors;

  // Exact minimizer: (I + lambda_s L) X = P_hat column by column. Row sums
  // stay 1 and the inverse is entrywise positive, so it is feasible.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(T, T);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    A(t, t) += cfg.lambda_s;
    A(t + 1, t + 1) += cfg.lambda_s;
    A(t, t + 1) -= cfg.lambda_s;
    A(t + 1, t) -= cfg.lambda_s;
  }
  Eigen::MatrixXd B(T, 4);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < 4; ++c) B(t, c) = p_hat.row(t)[c];
  }
  const Eigen::MatrixXd X = A.ldlt().solve(B);
  const Eigen::RowVectorXd mean = B.colwise().mean();
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_NEAR(out.row(t)[c], X(t, c), 1e-8);
      EXPECT_LT(std::abs(out.row(t)[c] - mean(c)), 1e-2);
    }
  }
}

TEST(RefinePgd, MatchesReferenceOptimum) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t T = 8;
    auto p_hat = random_posteriors(rng, T);
    const auto tt = random_target(rng, T);
    RefineConfig cfg;
    cfg.lambda_s = 0.5;
    cfg.lambda_b = 2.0;
    cfg.lambda = 1.0;
    cfg.theta_max = 0.4;
    const auto oracle = reference_solution(p_hat, tt, cfg, 100000);
    cfg.n_iter = 200;
    const auto out = refine_pgd(p_hat, tt, cfg);
    EXPECT_LT(max_abs_diff(out.posteriors, oracle), 1e-4);
    EXPECT_LE(refine_objective(out.posteriors, p_hat, tt, cfg), refine_objective(oracle, p_hat, tt, cfg) + 1e-9);
  }
}

TEST(RefinePgd, MonotoneAndFeasible) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 20 + static_cast<std::size_t>(trial);
    const auto p_hat = random_posteriors(rng, T);
    const auto tt = random_target(rng, T);
    RefineConfig cfg;
    if (trial % 2) cfg.step_size = 5.0;  // far too long: forces backtracking
    const auto out = refine_pgd(p_hat, tt, cfg);
    EXPECT_NEAR(out.objective.front(), refine_objective(p_hat, p_hat, tt, cfg), 1e-12);
    for (std::size_t k = 1; k < out.objective.size(); ++k) EXPECT_LE(out.objective[k], out.objective[k - 1]);
    if (trial % 2) {
      EXPECT_GT(out.rejected_steps, 0);
    }
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (double v : out.posteriors.row(t)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(RefinePgd, UniqueMinimizerFromDifferentStarts) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t T = 12;
    const auto p_hat = random_posteriors(rng, T);
    const auto tt = random_target(rng, T);
    RefineConfig cfg;
    cfg.lambda_s = 2.0;
    cfg.lambda_b = 1.0;
    cfg.lambda = 1.0;
    cfg.n_iter = 5000;
    const auto a0 = random_posteriors(rng, T);
    const auto b0 = random_posteriors(rng, T);
    const auto a = refine_pgd(p_hat, tt, cfg, &a0).posteriors;
    const auto b = refine_pgd(p_hat, tt, cfg, &b0).posteriors;
    EXPECT_LT(max_abs_diff(a, b), 1e-6);
  }
}

TEST(RefinePgd, ShapeChecks) {
  std::mt19937_64 rng(8);
  const auto p_hat = random_posteriors(rng, 10);
  EXPECT_THROW(refine_pgd(p_hat, random_target(rng, 9), RefineConfig{}), DataError);
  RefineConfig bad;
  bad.rho = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

}  // namespace
}  // namespace topseg
