#include <gtest/gtest.h>

#include <cmath>

#include "cgkmc/engine.hpp"

using namespace cgkmc;

namespace {

PotentialModel uniform(double j0, std::optional<double> c0 = std::nullopt) {
  PotentialModel m;
  m.j0 = j0;
  m.c0 = c0;
  return m;
}

MicroConfig random_config(int n, double p, RandomStream& rng) {
  MicroConfig s(static_cast<std::size_t>(n));
  for (auto& v : s) v = rng.uniform() < p;
  return s;
}

RunOptions every_event(double t_final) {
  RunOptions o;
  o.t_final = t_final;
  o.record_events = true;
  return o;
}

}  // namespace

TEST(ApplyEvent, Examples) {
  MicroConfig s{0, 1, 0};
  apply_event(s, {EventKind::Adsorb, 0, 0.0});
  EXPECT_EQ(s, (MicroConfig{1, 1, 0}));
  EXPECT_THROW(apply_event(s, {EventKind::Desorb, 2, 0.0}), IllegalEventError);
  EXPECT_THROW(apply_event(s, {EventKind::Adsorb, 1, 0.0}), IllegalEventError);

  CoarseConfig eta{3, 0};
  apply_event(eta, 3, {EventKind::Desorb, 0, 0.0});
  EXPECT_EQ(eta, (CoarseConfig{2, 0}));
  EXPECT_THROW(apply_event(eta, 3, {EventKind::Desorb, 1, 0.0}), IllegalEventError);
  eta[0] = 3;
  EXPECT_THROW(apply_event(eta, 3, {EventKind::Adsorb, 0, 0.0}), IllegalEventError);
}

TEST(Process, RejectsIllegalEvent) {
  const LatticeSpec spec(20, 1, 3);
  auto p = BlockProcess::micro(spec, uniform(1.0), MicroConfig(20, 0), 0.0);
  EXPECT_THROW(p.apply({EventKind::Desorb, 4, 0.0}, UpdateMode::Local), IllegalEventError);
  EXPECT_THROW(p.apply({EventKind::Adsorb, 20, 0.0}, UpdateMode::Local), IllegalEventError);
}

TEST(RunTrajectory, ZeroFinalTime) {
  const LatticeSpec spec(20, 1, 3);
  RandomStream rng(1, 0);
  MicroConfig s(20, 0);
  s[3] = 1;
  const auto t = run_trajectory(ProcessKind::Micro, spec, uniform(1.0), s, 0.0, every_event(0.0), rng);
  ASSERT_EQ(t.samples.size(), 1u);
  EXPECT_EQ(t.samples[0].t, 0.0);
  EXPECT_EQ(t.samples[0].coverage, 0.05);
  EXPECT_EQ(t.n_events, 0u);
}

TEST(RunTrajectory, Deterministic) {
  const LatticeSpec spec(200, 1, 20);
  for (auto kind : {ProcessKind::Micro, ProcessKind::Coarse, ProcessKind::Synthetic}) {
    const auto lattice = kind == ProcessKind::Micro ? spec : spec.with_q(5);
    RandomStream a(11, 3), b(11, 3);
    const auto ta = run_trajectory(kind, lattice, uniform(6.0, 0.07), MicroConfig(200, 0), 0.0, every_event(30.0), a);
    const auto tb = run_trajectory(kind, lattice, uniform(6.0, 0.07), MicroConfig(200, 0), 0.0, every_event(30.0), b);
    EXPECT_EQ(ta.events, tb.events);
    EXPECT_EQ(ta.samples, tb.samples);
    EXPECT_GT(ta.n_events, 100u);
  }
}

// Each iteration applies one event; coverage moves by exactly one particle.
TEST(RunTrajectory, NoNullSteps) {
  const LatticeSpec spec(100, 1, 10);
  RandomStream rng(2, 2);
  const auto t = run_trajectory(ProcessKind::Micro, spec, uniform(4.0), MicroConfig(100, 0), 0.0, every_event(20.0), rng);
  ASSERT_EQ(t.samples.size(), t.n_events + 1);
  ASSERT_EQ(t.events.size(), t.n_events);
  for (std::size_t i = 1; i < t.samples.size(); ++i) {
    EXPECT_NEAR(std::abs(t.samples[i].coverage - t.samples[i - 1].coverage), 0.01, 1e-12);
    EXPECT_GT(t.samples[i].t, t.samples[i - 1].t);
  }
  EXPECT_LE(t.last_event_time, 20.0);
}

TEST(RunTrajectory, CoarseAtQ1ReproducesMicro) {
  const LatticeSpec spec(300, 1, 30);
  RandomStream init(5, 0);
  const auto s0 = random_config(300, 0.3, init);
  for (auto time_step : {TimeStepMode::Paper, TimeStepMode::Exponential}) {
    auto options = every_event(50.0);
    options.time_step = time_step;
    RandomStream a(9, 1), b(9, 1), c(9, 1);
    const auto micro = run_trajectory(ProcessKind::Micro, spec, uniform(6.0), s0, 0.1, options, a);
    const auto coarse = run_trajectory(ProcessKind::Coarse, spec, uniform(6.0), s0, 0.1, options, b);
    const auto synthetic = run_trajectory(ProcessKind::Synthetic, spec, uniform(6.0), s0, 0.1, options, c);
    EXPECT_EQ(micro.events, coarse.events);
    EXPECT_EQ(micro.samples, coarse.samples);
    EXPECT_EQ(micro.events, synthetic.events);
    EXPECT_EQ(micro.samples, synthetic.samples);
  }
}

TEST(RunTrajectory, LocalEqualsGlobalUpdating) {
  const LatticeSpec spec(200, 1, 20);
  for (auto kind : {ProcessKind::Micro, ProcessKind::Coarse, ProcessKind::Synthetic}) {
    const auto lattice = kind == ProcessKind::Micro ? spec : spec.with_q(4);
    auto local = every_event(40.0);
    auto global = local;
    global.updating = UpdateMode::Global;
    RandomStream a(3, 7), b(3, 7);
    const auto tl = run_trajectory(kind, lattice, uniform(6.0, 0.07), MicroConfig(200, 0), 0.0, local, a);
    const auto tg = run_trajectory(kind, lattice, uniform(6.0, 0.07), MicroConfig(200, 0), 0.0, global, b);
    EXPECT_EQ(tl.events, tg.events);
    EXPECT_EQ(tl.samples, tg.samples);
  }
}

TEST(RunTrajectory, IncrementalTotalsStayFresh) {
  const LatticeSpec spec(120, 4, 12);
  const auto model = uniform(6.0);
  RandomStream rng(4, 0);
  auto process = BlockProcess::coarse(spec, model, CoarseConfig(30, 0), 0.3);
  SyntheticProcess syn(spec, model, MicroConfig(120, 0), 0.3);
  for (int step = 0; step < 5000; ++step) {
    process.apply(select_event(process.rates(), rng.uniform(), rng.uniform()), UpdateMode::Local);
    syn.apply(select_event(syn.rates(), rng.uniform(), rng.uniform()), UpdateMode::Local);
  }
  const CoarseConfig eta(process.occupancy().begin(), process.occupancy().end());
  const auto fresh = coarse_rates(spec, model, eta, 0.3);
  EXPECT_NEAR(process.rates().total(), fresh.total(), 1e-9 * fresh.total());
  const auto fresh_syn = synthetic_rates(spec, model, syn.config(), 0.3);
  EXPECT_NEAR(syn.rates().total(), fresh_syn.total(), 1e-9 * fresh_syn.total());
  EXPECT_EQ(syn.config().size(), 120u);
}

TEST(RunTrajectory, GridSampling) {
  const LatticeSpec spec(100, 1, 10);
  RunOptions options;
  options.t_final = 10.0;
  options.sampling_dt = 0.5;
  options.snapshot_times = {2.0, 7.5, 11.0};
  RandomStream rng(6, 6);
  const auto t = run_trajectory(ProcessKind::Micro, spec, uniform(3.0), MicroConfig(100, 0), 0.0, options, rng);
  ASSERT_EQ(t.samples.size(), 21u);
  for (std::size_t i = 0; i < t.samples.size(); ++i) EXPECT_DOUBLE_EQ(t.samples[i].t, 0.5 * static_cast<double>(i));
  EXPECT_EQ(t.samples[0].coverage, 0.0);
  ASSERT_EQ(t.snapshots.size(), 2u);
  EXPECT_EQ(t.snapshots[0].t, 2.0);
  EXPECT_EQ(t.snapshots[0].config.size(), 100u);
}

TEST(RunTrajectory, GridAgreesWithEventPath) {
  const LatticeSpec spec(100, 1, 10);
  RunOptions grid;
  grid.t_final = 15.0;
  grid.sampling_dt = 0.25;
  RandomStream a(8, 0), b(8, 0);
  const auto g = run_trajectory(ProcessKind::Micro, spec, uniform(3.0), MicroConfig(100, 0), 0.0, grid, a);
  const auto e = run_trajectory(ProcessKind::Micro, spec, uniform(3.0), MicroConfig(100, 0), 0.0, every_event(15.0), b);
  for (const auto& sample : g.samples) {
    double c = e.samples.front().coverage;
    for (const auto& ev : e.samples)
      if (ev.t <= sample.t) c = ev.coverage;
    EXPECT_EQ(sample.coverage, c) << "t=" << sample.t;
  }
}

TEST(RunTrajectory, StopsAtThreshold) {
  const LatticeSpec spec(100, 1, 10);
  RunOptions options = every_event(1000.0);
  options.stop_at_coverage = 0.3;
  RandomStream rng(1, 9);
  const auto t = run_trajectory(ProcessKind::Micro, spec, uniform(0.0), MicroConfig(100, 0), 0.0, options, rng);
  ASSERT_TRUE(t.first_passage.has_value());
  EXPECT_EQ(t.samples.back().coverage, 0.3);
  EXPECT_EQ(*t.first_passage, t.samples.back().t);

  RandomStream rng2(1, 9);
  const auto at_start = run_trajectory(ProcessKind::Micro, spec, uniform(0.0), MicroConfig(100, 1), 0.0, options, rng2);
  EXPECT_EQ(at_start.first_passage, 0.0);
}

TEST(RunTrajectory, ExponentialUsesThirdDraw) {
  const LatticeSpec spec(50, 1, 5);
  auto options = every_event(5.0);
  options.time_step = TimeStepMode::Exponential;
  RandomStream a(2, 0), b(2, 0);
  const auto exp_run = run_trajectory(ProcessKind::Micro, spec, uniform(1.0), MicroConfig(50, 0), 0.0, options, a);
  const auto paper = run_trajectory(ProcessKind::Micro, spec, uniform(1.0), MicroConfig(50, 0), 0.0, every_event(5.0), b);
  ASSERT_GT(exp_run.n_events, 2u);
  // First event identical (same rho1, rho2), times differ.
  EXPECT_EQ(exp_run.events[0].kind, paper.events[0].kind);
  EXPECT_EQ(exp_run.events[0].location, paper.events[0].location);
  EXPECT_NE(exp_run.events[0].dt, paper.events[0].dt);
}

// The mean exponential waiting time matches 1/R_T.
TEST(RunTrajectory, ExponentialMeanWait) {
  const LatticeSpec spec(10, 1, 2);
  auto options = every_event(1e9);
  options.time_step = TimeStepMode::Exponential;
  options.stop_at_coverage = 0.1;
  double total = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    RandomStream rng(3, static_cast<std::uint64_t>(i));
    total += *run_trajectory(ProcessKind::Micro, spec, uniform(1.0), MicroConfig(10, 0), 0.0, options, rng).first_passage;
  }
  EXPECT_NEAR(total / n, 0.1, 5 * 0.1 / std::sqrt(n));
}
