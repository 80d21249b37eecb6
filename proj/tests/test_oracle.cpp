#include <gtest/gtest.h>

#include <cmath>

#include "cgkmc/oracle.hpp"

using namespace cgkmc;
using namespace cgkmc::oracle;

namespace {

PotentialModel uniform(double j0, double beta = 1.0, std::optional<double> c0 = std::nullopt) {
  PotentialModel m;
  m.j0 = j0;
  m.beta = beta;
  m.c0 = c0;
  return m;
}

}  // namespace

TEST(StateIndex, EncodeDecode) {
  const StateIndex idx(3, 4);
  EXPECT_EQ(idx.size(), 64u);
  for (std::uint64_t s = 0; s < idx.size(); ++s) EXPECT_EQ(idx.encode(idx.decode(s)), s);
  EXPECT_EQ(idx.decode(1), (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(idx.decode(4), (std::vector<int>{0, 1, 0}));
}

TEST(Gibbs, ZeroBetaIsPrior) {
  const LatticeSpec spec(6, 1, 2);
  const auto mu = gibbs_measure(Level::Micro, spec, uniform(3.0, 0.0), Field(1.0));
  for (double p : mu) EXPECT_NEAR(p, 1.0 / 64, 1e-15);

  const LatticeSpec cells(6, 3, 2);
  const auto nu = gibbs_measure(Level::Coarse, cells, uniform(3.0, 0.0), Field(1.0));
  const StateIndex idx = StateIndex::coarse(cells);
  const double binom[] = {1.0 / 8, 3.0 / 8, 3.0 / 8, 1.0 / 8};
  for (std::uint64_t s = 0; s < idx.size(); ++s) {
    const auto d = idx.decode(s);
    EXPECT_NEAR(nu[s], binom[d[0]] * binom[d[1]], 1e-15);
  }
}

// Without interaction each site is an independent two-state system with
// occupied/empty odds exp(-beta h).
TEST(Gibbs, IndependentSites) {
  const LatticeSpec spec(2, 1, 1);
  const auto mu = gibbs_measure(Level::Micro, spec, uniform(0.0, 1.3), Field(0.4));
  EXPECT_NEAR(mu[1] / mu[0], std::exp(-1.3 * 0.4), 1e-14);
  EXPECT_NEAR(mu[3] / mu[2], std::exp(-1.3 * 0.4), 1e-14);
}

TEST(Gibbs, SingleCellBinomialWeights) {
  const LatticeSpec spec(2, 2, 1);
  const auto model = uniform(1.5);
  const auto nu = gibbs_measure(Level::Coarse, spec, model, Field(0.0));
  const double jbar = coarse_j(spec, model, 0, 0);
  const double w[] = {0.25, 0.5, 0.25 * std::exp(jbar)};
  const double z = w[0] + w[1] + w[2];
  for (int p = 0; p < 3; ++p) EXPECT_NEAR(nu[static_cast<std::size_t>(p)], w[p] / z, 1e-15);
}

TEST(Generator, RowsSumToZero) {
  for (auto kind : {ProcessKind::Micro, ProcessKind::Coarse, ProcessKind::Synthetic}) {
    const LatticeSpec spec(8, kind == ProcessKind::Micro ? 1 : 2, 3);
    const auto q = generator_matrix(kind, spec, uniform(4.0), Field(0.7));
    EXPECT_LT(q.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Generator, HandComputedTwoSites) {
  const LatticeSpec spec(2, 1, 1);
  const double beta = 0.8, j0 = 2.0, h = 0.3;
  const auto q = generator_matrix(ProcessKind::Micro, spec, uniform(j0, beta), Field(h));
  const double free_desorb = std::exp(beta * h);
  const double bound_desorb = std::exp(-beta * (j0 / 2 - h));
  Eigen::Matrix4d expected;
  expected << -2, 1, 1, 0,                                //
      free_desorb, -free_desorb - 1, 0, 1,                //
      free_desorb, 0, -free_desorb - 1, 1,                //
      0, bound_desorb, bound_desorb, -2 * bound_desorb;
  EXPECT_LT((q - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Generator, CoarseAtQ1EqualsMicro) {
  const LatticeSpec spec(8, 1, 3);
  const auto model = uniform(5.0);
  EXPECT_EQ(generator_matrix(ProcessKind::Coarse, spec, model, Field(0.4)),
            generator_matrix(ProcessKind::Micro, spec, model, Field(0.4)));
}

TEST(Generator, RejectsLargeSpaces) {
  EXPECT_THROW(generator_matrix(ProcessKind::Micro, LatticeSpec(16, 1, 2), uniform(1.0), Field(0.0)), std::length_error);
}

TEST(Stationary, TwoState) {
  Eigen::Matrix2d q;
  q << -0.3, 0.3, 1.7, -1.7;
  const auto pi = stationary_distribution(q);
  EXPECT_NEAR(pi[0], 1.7 / 2.0, 1e-15);
  EXPECT_NEAR(pi[1], 0.3 / 2.0, 1e-15);
}

TEST(Stationary, MatchesGibbsMicro) {
  const LatticeSpec spec(6, 1, 2);
  for (double beta : {0.5, 2.0, 6.0}) {
    const auto model = uniform(1.0, beta);
    const auto pi = stationary_distribution(generator_matrix(ProcessKind::Micro, spec, model, Field(0.5)));
    EXPECT_LT(total_variation(pi, gibbs_measure(Level::Micro, spec, model, Field(0.5))), 1e-10);
  }
}

TEST(Stationary, MatchesGibbsCoarse) {
  const LatticeSpec spec(6, 2, 2);
  for (double beta : {0.5, 2.0, 6.0}) {
    const auto model = uniform(1.0, beta);
    const auto pi = stationary_distribution(generator_matrix(ProcessKind::Coarse, spec, model, Field(0.5)));
    EXPECT_LT(total_variation(pi, gibbs_measure(Level::Coarse, spec, model, Field(0.5))), 1e-10);
  }
}

TEST(Stationary, MatchesGibbsGroupedAndSynthetic) {
  const auto model = uniform(4.0, 1.0, 0.1);
  const LatticeSpec micro(8, 1, 3);
  EXPECT_LT(total_variation(stationary_distribution(generator_matrix(ProcessKind::Micro, micro, model, 0.0)),
                            gibbs_measure(Level::Micro, micro, model, 0.0)),
            1e-10);
  const LatticeSpec cells(9, 3, 4);
  EXPECT_LT(total_variation(stationary_distribution(generator_matrix(ProcessKind::Coarse, cells, model, 0.0)),
                            gibbs_measure(Level::Coarse, cells, model, 0.0)),
            1e-10);
  const LatticeSpec syn(8, 4, 3);
  const auto field_model = uniform(4.0, 1.5);
  EXPECT_LT(total_variation(stationary_distribution(generator_matrix(ProcessKind::Synthetic, syn, field_model, 1.0)),
                            gibbs_measure(Level::Synthetic, syn, field_model, 1.0)),
            1e-10);
}

// The synthetic measure projects onto the coarse Gibbs measure.
TEST(Gibbs, SyntheticProjectsToCoarse) {
  const LatticeSpec spec(8, 4, 3);
  const auto model = uniform(5.0, 1.0);
  const auto pushed = pushforward(spec, gibbs_measure(Level::Synthetic, spec, model, 2.0));
  EXPECT_LT(total_variation(pushed, gibbs_measure(Level::Coarse, spec, model, 2.0)), 1e-12);
}

TEST(DetailedBalance, HoldsForAllProcesses) {
  EXPECT_LE(detailed_balance_audit(ProcessKind::Micro, LatticeSpec(8, 1, 2), uniform(6.0), Field(3.0)), 1e-10);
  for (auto [n, q] : {std::pair{6, 2}, {6, 3}, {8, 4}, {12, 3}, {12, 4}})
    EXPECT_LE(detailed_balance_audit(ProcessKind::Coarse, LatticeSpec(n, q, n / 2), uniform(6.0), Field(3.0)), 1e-10)
        << n << "/" << q;
  EXPECT_LE(detailed_balance_audit(ProcessKind::Synthetic, LatticeSpec(8, 2, 3), uniform(6.0), Field(3.0)), 1e-10);
}

TEST(DetailedBalance, CorruptedRateDetected) {
  const LatticeSpec spec(6, 2, 2);
  const auto model = uniform(3.0);
  auto q = generator_matrix(ProcessKind::Coarse, spec, model, Field(1.0));
  const StateIndex idx = StateIndex::coarse(spec);
  for (std::uint64_t s = 0; s < idx.size(); ++s) {
    auto d = idx.decode(s);
    if (d[1] == 0) continue;
    --d[1];
    const auto t = static_cast<Eigen::Index>(idx.encode(d));
    const auto i = static_cast<Eigen::Index>(s);
    q(i, i) -= q(i, t);
    q(i, t) *= 2.0;
  }
  EXPECT_GT(detailed_balance_audit(q, gibbs_measure(Level::Coarse, spec, model, Field(1.0))), 0.1);
}

TEST(RateGap, AdsorptionExactAndQ1Zero) {
  const auto model = uniform(6.0);
  RandomStream rng(1, 1);
  for (int q : {1, 2, 5}) {
    const LatticeSpec spec(40, q, 8);
    for (int trial = 0; trial < 20; ++trial) {
      MicroConfig s(40);
      for (auto& v : s) v = rng.uniform() < 0.5;
      for (const auto& g : exact_coarse_rate_gap(spec, model, s, Field(0.2))) {
        EXPECT_NEAR(g.exact_adsorption, g.approx_adsorption, 1e-12);
        if (q == 1) {
          EXPECT_EQ(g.exact_desorption, g.approx_desorption);
        }
      }
    }
  }
}

TEST(RateGap, DesorptionGapGrowsWithQ) {
  const auto model = uniform(6.0);
  std::vector<double> mean_gap;
  for (int q : {2, 5, 10}) {
    const LatticeSpec spec(200, q, 20);
    RandomStream rng(2, 0);
    double total = 0.0;
    int count = 0;
    for (int trial = 0; trial < 100; ++trial) {
      MicroConfig s(200);
      for (auto& v : s) v = rng.uniform() < 0.5;
      for (const auto& g : exact_coarse_rate_gap(spec, model, s, Field(0.0))) {
        total += std::abs(g.exact_desorption - g.approx_desorption) / q;
        ++count;
      }
    }
    mean_gap.push_back(total / count);
  }
  EXPECT_LT(mean_gap[0], mean_gap[1]);
  EXPECT_LT(mean_gap[1], mean_gap[2]);
}

// D(T*μ1 ‖ T*μ2) ≤ D(μ1 ‖ μ2) for Gibbs pairs at different temperatures.
TEST(Information, DataProcessingOnGibbsPairs) {
  const LatticeSpec spec(8, 2, 3);
  for (auto [b1, b2] : {std::pair{0.5, 2.0}, {1.0, 6.0}, {3.0, 0.1}}) {
    const auto m1 = gibbs_measure(Level::Micro, spec, uniform(4.0, b1), 1.0);
    const auto m2 = gibbs_measure(Level::Micro, spec, uniform(4.0, b2), 1.0);
    EXPECT_LE(kl_divergence(pushforward(spec, m1), pushforward(spec, m2)), kl_divergence(m1, m2) + 1e-12);
    EXPECT_GT(kl_divergence(m1, m2), 0.0);
  }
}

TEST(Information, KlBasics) {
  EXPECT_EQ(kl_divergence({0.5, 0.5}, {0.5, 0.5}), 0.0);
  EXPECT_TRUE(std::isinf(kl_divergence({0.5, 0.5}, {1.0, 0.0})));
  EXPECT_NEAR(kl_divergence({0.5, 0.5}, {0.25, 0.75}), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
}
