#include <gtest/gtest.h>

#include <cmath>

#include "cgkmc/analysis.hpp"

using namespace cgkmc;

namespace {

EmpiricalDistribution dist(std::vector<double> probs) {
  EmpiricalDistribution d;
  d.probs = std::move(probs);
  for (std::size_t i = 0; i <= d.probs.size(); ++i) d.bin_edges.push_back(static_cast<double>(i));
  d.n_samples = 100;
  return d;
}

EmpiricalDistribution random_dist(std::size_t bins, RandomStream& rng, double zero_prob) {
  std::vector<double> p(bins);
  double total = 0.0;
  for (auto& v : p) {
    v = rng.uniform() < zero_prob ? 0.0 : rng.uniform();
    total += v;
  }
  if (total == 0.0) {
    p[0] = 1.0;
    total = 1.0;
  }
  for (auto& v : p) v /= total;
  return dist(p);
}

CoverageEnsemble ensemble(std::vector<std::vector<double>> paths, double dt = 1.0) {
  CoverageEnsemble e;
  e.grid_dt = dt;
  e.paths = std::move(paths);
  return e;
}

}  // namespace

TEST(Coverage, Examples) {
  EXPECT_EQ(coverage(MicroConfig(10, 0)), 0.0);
  EXPECT_EQ(coverage(LatticeSpec(20, 5, 2), CoarseConfig(4, 5)), 1.0);
  MicroConfig half(1000, 0);
  for (int x = 0; x < 500; ++x) half[x * 2] = 1;
  EXPECT_EQ(coverage(half), 0.5);
}

TEST(Errors, IdenticalEnsemblesAreZero) {
  const auto a = ensemble({{0.0, 0.1, 0.4}, {0.0, 0.2, 0.3}});
  const auto r = weak_strong_errors(a, a);
  EXPECT_EQ(r.weak, 0.0);
  EXPECT_EQ(r.strong, 0.0);
}

TEST(Errors, HandComputed) {
  // Left-point quadrature over the intervals [0,0.5) and [0.5,1).
  const auto ref = ensemble({{0.0, 0.4, 0.9}, {0.2, 0.6, 0.9}}, 0.5);
  const auto cg = ensemble({{0.2, 0.4, 0.0}, {0.0, 0.2, 0.0}}, 0.5);
  const auto r = weak_strong_errors(ref, cg);
  // means: ref (0.1, 0.5), cg (0.1, 0.3)
  EXPECT_NEAR(r.weak, 0.0 * 0.5 + 0.2 * 0.5, 1e-15);
  // mean |diff|: (0.2, 0.2)
  EXPECT_NEAR(r.strong, 0.2 * 0.5 + 0.2 * 0.5, 1e-15);
  EXPECT_NEAR(r.reference_integral, 0.1 * 0.5 + 0.5 * 0.5, 1e-15);
  EXPECT_NEAR(r.relative_strong(), 0.2 / 0.3, 1e-14);
}

TEST(Errors, ContractViolations) {
  const auto a = ensemble({{0.0, 0.1}, {0.0, 0.2}});
  EXPECT_THROW(weak_strong_errors(a, ensemble({{0.0, 0.1}})), std::invalid_argument);
  EXPECT_THROW(weak_strong_errors(a, ensemble({{0.0, 0.1}, {0.0, 0.2}}, 0.5)), std::invalid_argument);
  EXPECT_THROW(weak_strong_errors(a, ensemble({{0.0, 0.1}, {0.0, 0.2, 0.3}})), std::invalid_argument);
}

TEST(Errors, WeakBoundedByStrong) {
  RandomStream rng(1, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> a(20, std::vector<double>(30)), b = a;
    for (auto* paths : {&a, &b})
      for (auto& path : *paths)
        for (auto& v : path) v = rng.uniform();
    const auto r = weak_strong_errors(ensemble(a, 0.1), ensemble(b, 0.1));
    ASSERT_LE(r.weak, r.strong + 2 * r.strong_stderr);
    ASSERT_LE(r.weak, r.strong + 1e-12);
  }
}

TEST(SlopeFit, ExactPowerLaw) {
  const std::vector<double> x{10, 25, 50}, y{0.3 * 100, 0.3 * 625, 0.3 * 2500};
  const auto fit = fit_loglog_slope(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 0.3, 1e-12);
  EXPECT_NEAR(fit.half_width, 0.0, 1e-9);
  EXPECT_THROW(fit_loglog_slope(std::vector<double>{1, 2}, std::vector<double>{1, 0}), std::invalid_argument);
}

TEST(ExitTime, Examples) {
  const std::vector<TrajectorySample> start_high{{0.0, 0.95}, {1.0, 0.5}};
  EXPECT_EQ(exit_time(start_high, 0.9), 0.0);
  const std::vector<TrajectorySample> rising{{0.0, 0.1}, {1.5, 0.5}, {3.2, 0.91}, {4.0, 0.99}};
  EXPECT_EQ(exit_time(rising, 0.9), 3.2);
  EXPECT_EQ(exit_time(rising, 1.0), std::nullopt);
  EXPECT_THROW(exit_time(rising, 0.0), std::invalid_argument);
}

TEST(ExitTime, Censoring) {
  const std::vector<std::optional<double>> times{1.0, std::nullopt, 3.0, std::nullopt};
  const auto s = summarize_exit_times(times);
  EXPECT_EQ(s.mean, 2.0);
  EXPECT_EQ(s.n_crossed, 2u);
  EXPECT_EQ(s.n_censored, 2u);
  EXPECT_EQ(s.censored_fraction(), 0.5);
}

TEST(Histogram, Examples) {
  const std::vector<double> same(10, 4.0);
  const auto d = histogram(same);
  EXPECT_EQ(d.n_bins(), 100u);
  int occupied = 0;
  for (double p : d.probs) occupied += p > 0.0;
  EXPECT_EQ(occupied, 1);

  const auto e = histogram(std::vector<double>{0.0, 1.0, 2.0, 3.0}, 3);
  EXPECT_EQ(e.probs, (std::vector<double>{0.25, 0.25, 0.5}));
  EXPECT_THROW(histogram(std::vector<double>{5.0}, 3, std::pair{0.0, 1.0}), std::invalid_argument);
}

TEST(Histogram, UniformIsFlat) {
  RandomStream rng(2, 2);
  const std::size_t n = 100000;
  std::vector<double> samples(n);
  for (auto& v : samples) v = rng.uniform();
  const auto d = histogram(samples, 100, std::pair{0.0, 1.0});
  const double p = 0.01;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
  for (double v : d.probs) EXPECT_NEAR(v, p, 3 * sigma);
}

TEST(RelativeEntropy, Examples) {
  EXPECT_EQ(relative_entropy(dist({0.2, 0.8}), dist({0.2, 0.8})), 0.0);
  EXPECT_NEAR(relative_entropy(dist({0.5, 0.5}), dist({0.25, 0.75})), 0.14384103622589045, 1e-12);
  EXPECT_TRUE(std::isinf(relative_entropy(dist({0.5, 0.5}), dist({1.0, 0.0}))));
  EXPECT_EQ(relative_entropy(dist({1.0, 0.0}), dist({0.5, 0.5})), std::log(2.0));
  EXPECT_THROW(relative_entropy(dist({0.5, 0.5}), dist({0.2, 0.3, 0.5})), std::invalid_argument);
}

TEST(RelativeEntropy, SmoothingKeepsFinite) {
  const double d = relative_entropy(dist({0.5, 0.5}), dist({1.0, 0.0}), 1.0);
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_GT(d, 0.0);
}

TEST(CoarsenHistogram, Examples) {
  const auto p = dist({0.1, 0.2, 0.3, 0.4});
  EXPECT_EQ(coarsen_histogram(p, 1).probs, p.probs);
  const auto two = coarsen_histogram(p, 2);
  EXPECT_NEAR(two.probs[0], 0.3, 1e-15);
  EXPECT_NEAR(two.probs[1], 0.7, 1e-15);
  EXPECT_EQ(two.bin_edges, (std::vector<double>{0, 2, 4}));
  EXPECT_NEAR(relative_entropy(coarsen_histogram(p, 4), coarsen_histogram(dist({0.7, 0.1, 0.1, 0.1}), 4)), 0.0, 1e-15);
  EXPECT_THROW(coarsen_histogram(p, 3), std::invalid_argument);
}

TEST(RelativeEntropy, NonNegativeAndDataProcessing) {
  RandomStream rng(3, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t factor = 1 + rng.below(5);
    const std::size_t bins = factor * (1 + rng.below(20));
    const auto p = random_dist(bins, rng, 0.2);
    const auto r = random_dist(bins, rng, trial % 2 ? 0.0 : 0.1);
    const double full = relative_entropy(p, r);
    ASSERT_GE(full, 0.0);
    ASSERT_LE(relative_entropy(coarsen_histogram(p, factor), coarsen_histogram(r, factor)), full + 1e-12);
    ASSERT_EQ(relative_entropy(p, p), 0.0);
  }
}

TEST(MeanField, NonInteracting) {
  const auto at_zero = mean_field_roots(1.0, 0.0, 0.0);
  ASSERT_EQ(at_zero.roots.size(), 1u);
  EXPECT_NEAR(at_zero.roots[0], 0.5, 1e-9);
  // (1 − c) = c e^{βh}
  const auto shifted = mean_field_roots(2.0, 0.0, 0.7);
  ASSERT_EQ(shifted.roots.size(), 1u);
  EXPECT_NEAR(shifted.roots[0], 1.0 / (1.0 + std::exp(2.0 * 0.7)), 1e-9);
}

TEST(MeanField, CriticalCoupling) {
  for (int i = 0; i <= 400; ++i) {
    const double h = 4.0 * i / 400;
    const auto p = mean_field_roots(1.0, 4.0, h);
    EXPECT_EQ(p.roots.size(), 1u) << "h=" << h;
  }
  const auto centre = mean_field_roots(1.0, 4.0, 2.0);
  EXPECT_NEAR(centre.roots[0], 0.5, 1e-6);
}

TEST(MeanField, Hysteresis) {
  bool three = false;
  for (int i = 0; i <= 600; ++i) {
    const auto p = mean_field_roots(1.0, 6.0, 6.0 * i / 600);
    ASSERT_TRUE(p.roots.size() == 1 || p.roots.size() == 3 || p.degenerate) << p.h;
    three = three || p.roots.size() == 3;
    for (double c : p.roots) {
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0);
    }
  }
  EXPECT_TRUE(three);
  const auto sym = mean_field_roots(1.0, 6.0, 3.0);
  ASSERT_EQ(sym.roots.size(), 3u);
  EXPECT_NEAR(sym.roots[1], 0.5, 1e-9);
  EXPECT_NEAR(sym.roots[0] + sym.roots[2], 1.0, 1e-9);
}

TEST(MeanField, EquilibriaFollowGrid) {
  PotentialModel m;
  m.beta = 2.0;
  m.j0 = 3.0;
  const std::vector<double> grid{0.0, 1.0, 2.0, 3.0};
  const auto pts = mean_field_equilibria(m, grid);
  ASSERT_EQ(pts.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(pts[i].h, grid[i]);
    auto f = [&](double c) { return (1 - c) - c * std::exp(-2.0 * (3.0 * c - grid[i])); };
    for (double c : pts[i].roots) EXPECT_LE(f(c - 1e-9) * f(c + 1e-9), 0.0) << c;
  }
}
