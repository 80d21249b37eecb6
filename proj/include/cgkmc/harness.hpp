// Experiment drivers behind the command-line tool: seeded realization
// ensembles, error comparison, exit-time statistics, mean-field curves and
// the exact-oracle self check.
#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include "json.hpp"
#include <sstream>
#include <string>
#include <vector>

#include "cgkmc/analysis.hpp"
#include "cgkmc/config.hpp"
#include "cgkmc/engine.hpp"
#include "cgkmc/oracle.hpp"
#include "cgkmc/parallel.hpp"

namespace cgkmc {

inline constexpr const char* kCodeVersion = "cgkmc 1.0.0";

/// Stream ids below 2^62 drive the dynamics of realization i; the initial
/// state and snapshot reconstruction use disjoint stream ranges.
inline constexpr std::uint64_t kInitialStateStream = std::uint64_t{1} << 62;
inline constexpr std::uint64_t kReconstructionStream = std::uint64_t{1} << 63;

/// Initial microscopic state of realization i, identical for every q.
inline MicroConfig initial_state(const ExperimentConfig& cfg, std::size_t realization) {
  MicroConfig sigma(static_cast<std::size_t>(cfg.n_sites), 0);
  const auto target = static_cast<int>(std::lround(cfg.initial_coverage * cfg.n_sites));
  if (cfg.initial_pattern == InitialPattern::Island) {
    const int start = (cfg.n_sites - target) / 2;
    for (int x = start; x < start + target; ++x) sigma[static_cast<std::size_t>(x)] = 1;
    return sigma;
  }
  RandomStream rng(cfg.master_seed, kInitialStateStream + realization);
  std::vector<int> sites(static_cast<std::size_t>(cfg.n_sites));
  std::iota(sites.begin(), sites.end(), 0);
  for (int i = 0; i < target; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(cfg.n_sites - i));
    std::swap(sites[static_cast<std::size_t>(i)], sites[j]);
    sigma[static_cast<std::size_t>(sites[static_cast<std::size_t>(i)])] = 1;
  }
  return sigma;
}

inline ProcessKind process_for(const ExperimentConfig& cfg, int q) {
  return q == 1 ? ProcessKind::Micro : cfg.coarse_process;
}

/// Realization i of level q, seeded with stream (master_seed, i).
inline Trajectory run_realization(const ExperimentConfig& cfg, int q, std::size_t realization,
                                  const RunOptions& options) {
  RandomStream rng(cfg.master_seed, realization);
  return run_trajectory(process_for(cfg, q), cfg.lattice(q), cfg.model(), initial_state(cfg, realization),
                        cfg.field(), options, rng);
}

inline RunOptions grid_options(const ExperimentConfig& cfg) {
  RunOptions o;
  o.t_final = cfg.t_final;
  o.sampling_dt = cfg.sampling_dt;
  o.time_step = cfg.time_step;
  o.updating = cfg.updating;
  return o;
}

/// Process CPU seconds (all threads).
inline double process_cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

inline CoverageEnsemble coverage_ensemble(const ExperimentConfig& cfg, int q, int workers) {
  const auto n = static_cast<std::size_t>(cfg.realizations);
  CoverageEnsemble ensemble;
  ensemble.grid_dt = cfg.sampling_dt;
  ensemble.paths.resize(n);
  const RunOptions options = grid_options(cfg);
  parallel_for(n, workers, [&](std::size_t i) {
    const Trajectory t = run_realization(cfg, q, i, options);
    std::vector<double> path;
    path.reserve(t.samples.size());
    for (const auto& s : t.samples) path.push_back(s.coverage);
    ensemble.paths[i] = std::move(path);
  });
  return ensemble;
}

// ---------------------------------------------------------------- compare

struct ConvergenceRow {
  std::size_t n_realizations;
  SlopeFit weak;
  SlopeFit strong;
};

struct CompareResult {
  std::vector<int> qs;  // coarse levels compared against q = 1
  std::vector<ErrorReport> reports;
  std::optional<SlopeFit> weak_fit;
  std::optional<SlopeFit> strong_fit;
  std::vector<ConvergenceRow> convergence;
  std::map<int, double> cpu_seconds;
};

namespace harness_detail {

inline CoverageEnsemble prefix(const CoverageEnsemble& e, std::size_t n) {
  CoverageEnsemble out;
  out.grid_dt = e.grid_dt;
  out.paths.assign(e.paths.begin(), e.paths.begin() + static_cast<long>(n));
  return out;
}

inline std::optional<SlopeFit> try_fit(const std::vector<int>& qs, const std::vector<double>& errors) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (!(errors[i] > 0.0)) return std::nullopt;
    x.push_back(qs[i]);
    y.push_back(errors[i]);
  }
  if (x.size() < 2) return std::nullopt;
  return fit_loglog_slope(x, y);
}

}  // namespace harness_detail

/// Paired-seed weak and strong errors of every q > 1 in the config against
/// q = 1, plus log-log slopes over q and their dependence on the number of
/// realizations (prefixes of 10%, 20%, ..., 100% of the ensemble).
inline CompareResult run_compare(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  CompareResult result;
  double t0 = process_cpu_seconds();
  const CoverageEnsemble reference = coverage_ensemble(cfg, 1, workers);
  result.cpu_seconds[1] = process_cpu_seconds() - t0;
  std::vector<CoverageEnsemble> coarse;
  for (int q : cfg.coarse_q) {
    if (q == 1) continue;
    t0 = process_cpu_seconds();
    coarse.push_back(coverage_ensemble(cfg, q, workers));
    result.cpu_seconds[q] = process_cpu_seconds() - t0;
    result.qs.push_back(q);
    result.reports.push_back(weak_strong_errors(reference, coarse.back()));
  }
  auto fits_for = [&](std::size_t n) {
    std::vector<double> weak, strong;
    for (const auto& e : coarse) {
      const auto r = weak_strong_errors(harness_detail::prefix(reference, n), harness_detail::prefix(e, n));
      weak.push_back(r.weak);
      strong.push_back(r.strong);
    }
    return std::pair{harness_detail::try_fit(result.qs, weak), harness_detail::try_fit(result.qs, strong)};
  };
  std::tie(result.weak_fit, result.strong_fit) = fits_for(reference.n_realizations());
  const std::size_t n = reference.n_realizations();
  for (std::size_t step = 1; step <= 10; ++step) {
    const std::size_t k = std::max<std::size_t>(2, n * step / 10);
    if (k > n || (!result.convergence.empty() && result.convergence.back().n_realizations == k)) continue;
    const auto [weak, strong] = fits_for(k);
    if (weak && strong) result.convergence.push_back({k, *weak, *strong});
  }
  return result;
}

// ------------------------------------------------------------- exit times

struct ExitTimeRow {
  int q = 1;
  ExitTimeSummary summary;
  double relative_error = 0.0;
  /// D(ρ^q_τ ‖ ρ_τ) on shared bins spanning both samples.
  double relative_entropy = 0.0;
  double cpu_seconds = 0.0;
  EmpiricalDistribution histogram;
};

struct ExitTimeStudy {
  std::vector<ExitTimeRow> rows;  // rows[0] is q = 1
};

inline std::vector<std::optional<double>> exit_times_for(const ExperimentConfig& cfg, int q, int workers) {
  RunOptions options;
  options.t_final = cfg.t_final;
  options.time_step = cfg.time_step;
  options.updating = cfg.updating;
  options.stop_at_coverage = cfg.threshold_c_plus;
  options.sampling_dt = cfg.t_final;  // only the endpoints; the crossing time is tracked exactly
  std::vector<std::optional<double>> out(static_cast<std::size_t>(cfg.realizations));
  parallel_for(out.size(), workers,
               [&](std::size_t i) { out[i] = run_realization(cfg, q, i, options).first_passage; });
  return out;
}

/// Mean exit time to coverage >= C+ per q, relative error against q = 1,
/// relative entropy of the exit-time histograms, censoring and CPU time.
inline ExitTimeStudy run_exit_times(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  std::vector<int> qs{1};
  for (int q : cfg.coarse_q)
    if (q != 1) qs.push_back(q);
  ExitTimeStudy study;
  for (int q : qs) {
    ExitTimeRow row;
    row.q = q;
    const double t0 = process_cpu_seconds();
    const auto times = exit_times_for(cfg, q, workers);
    row.cpu_seconds = process_cpu_seconds() - t0;
    row.summary = summarize_exit_times(times);
    study.rows.push_back(std::move(row));
  }
  const auto& ref = study.rows.front().summary;
  const auto bins = static_cast<std::size_t>(cfg.histogram_bins);
  for (auto& row : study.rows) {
    if (ref.n_crossed == 0 || row.summary.n_crossed == 0) {
      row.relative_error = std::numeric_limits<double>::quiet_NaN();
      row.relative_entropy = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    row.relative_error = std::abs(row.summary.mean - ref.mean) / ref.mean;
    const auto [lo_a, hi_a] = std::minmax_element(ref.crossed.begin(), ref.crossed.end());
    const auto [lo_b, hi_b] = std::minmax_element(row.summary.crossed.begin(), row.summary.crossed.end());
    const std::pair range{std::min(*lo_a, *lo_b), std::max(*hi_a, *hi_b)};
    row.histogram = histogram(row.summary.crossed, bins, range);
    row.relative_entropy = relative_entropy(row.histogram, histogram(ref.crossed, bins, range));
  }
  return study;
}

// ------------------------------------------------------------- oracle check

struct OracleCheck {
  std::string name;
  double value;
  double tolerance;
  bool passed() const { return value <= tolerance; }
};

/// Exact stationary-vs-Gibbs and detailed-balance checks on built-in tiny
/// instances of every process.
inline std::vector<OracleCheck> run_oracle_checks() {
  std::vector<OracleCheck> checks;
  struct Instance {
    ProcessKind kind;
    int n, q, range;
    double beta_j0, h;
    std::optional<double> c0;
  };
  const std::vector<Instance> instances{
      {ProcessKind::Micro, 6, 1, 2, 2.0, 0.5, std::nullopt},   {ProcessKind::Micro, 8, 1, 2, 6.0, 3.0, std::nullopt},
      {ProcessKind::Micro, 8, 1, 3, 4.0, 0.0, 0.2},            {ProcessKind::Coarse, 6, 2, 2, 3.0, 1.0, std::nullopt},
      {ProcessKind::Coarse, 8, 4, 3, 6.0, 3.0, std::nullopt},  {ProcessKind::Coarse, 12, 3, 4, 5.0, 0.0, 0.1},
      {ProcessKind::Synthetic, 8, 2, 3, 4.0, 2.0, std::nullopt},
  };
  auto kind_name = [](ProcessKind k) {
    return k == ProcessKind::Micro ? "micro" : k == ProcessKind::Coarse ? "coarse" : "synthetic";
  };
  for (const auto& inst : instances) {
    const LatticeSpec spec(inst.n, inst.q, inst.range);
    PotentialModel model;
    model.beta = 1.0;
    model.j0 = inst.beta_j0;
    model.c0 = inst.c0;
    const Field h(inst.h);
    std::ostringstream label;
    label << kind_name(inst.kind) << " N=" << inst.n << " q=" << inst.q << " L=" << inst.range
          << " betaJ0=" << inst.beta_j0 << (inst.c0 ? " grouped" : " field");
    const auto generator = oracle::generator_matrix(inst.kind, spec, model, h);
    const auto gibbs = oracle::gibbs_measure(oracle::equilibrium_level(inst.kind), spec, model, h);
    const auto pi = oracle::stationary_distribution(generator);
    checks.push_back({label.str() + " stationary TV", oracle::total_variation(pi, gibbs), 1e-10});
    checks.push_back({label.str() + " detailed balance", oracle::detailed_balance_audit(generator, gibbs), 1e-10});
  }
  return checks;
}

// ------------------------------------------------------------------ output

namespace harness_detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return config_detail::format_double(v);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

/// FNV-1a 64-bit.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace harness_detail

/// Bookkeeping for one command: written with status "running" before the
/// work starts and rewritten with timings when it finishes.
class RunManifest {
 public:
  RunManifest(std::filesystem::path dir, std::string command, const ExperimentConfig& cfg)
      : path_(std::move(dir) / "manifest.json") {
    const std::string text = to_config_text(cfg);
    std::ostringstream hash;
    hash << std::hex << harness_detail::fnv1a(text);
    doc_["command"] = std::move(command);
    doc_["code_version"] = kCodeVersion;
    doc_["config_hash"] = hash.str();
    doc_["config"] = text;
    doc_["master_seed"] = cfg.master_seed;
    nlohmann::json seeds = nlohmann::json::array();
    for (int i = 0; i < cfg.realizations; ++i)
      seeds.push_back({{"realization", i}, {"master_seed", cfg.master_seed}, {"stream", i}});
    doc_["realization_seeds"] = std::move(seeds);
    doc_["stages"] = nlohmann::json::array();
    doc_["status"] = "running";
    write();
  }

  template <typename F>
  void stage(const std::string& name, F&& work) {
    const auto start = std::chrono::steady_clock::now();
    work();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    doc_["stages"].push_back({{"name", name}, {"wall_seconds", wall}});
  }

  void finish(bool ok) {
    doc_["status"] = ok ? "complete" : "failed";
    write();
  }

 private:
  void write() const {
    auto out = harness_detail::open_out(path_);
    out << doc_.dump(2) << "\n";
  }

  std::filesystem::path path_;
  nlohmann::json doc_;
};

inline void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t) {
  using harness_detail::num;
  auto out = harness_detail::open_out(path);
  out << "t,coverage\n";
  for (const auto& s : t.samples) out << num(s.t) << ',' << num(s.coverage) << '\n';
}

/// simulate: trajectory_q<q>_r<i>.csv per (q, realization) plus
/// snapshot_q<q>_r<i>_t<time>.csv (site, spin) at the snapshot times.
/// Coarse snapshots are reconstructed uniformly inside each cell.
inline void cmd_simulate(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  const std::filesystem::path dir(cfg.directory);
  prepare_output_dir(dir);
  RunManifest manifest(dir, "simulate", cfg);
  try {
    for (int q : cfg.coarse_q) {
      manifest.stage("q=" + std::to_string(q), [&] {
        RunOptions options = grid_options(cfg);
        options.snapshot_times = cfg.snapshot_times;
        const LatticeSpec spec = cfg.lattice(q);
        parallel_for(static_cast<std::size_t>(cfg.realizations), workers, [&](std::size_t i) {
          const Trajectory t = run_realization(cfg, q, i, options);
          const std::string stem = "q" + std::to_string(q) + "_r" + std::to_string(i);
          write_trajectory_csv(dir / ("trajectory_" + stem + ".csv"), t);
          RandomStream recon(cfg.master_seed, kReconstructionStream + i);
          for (const auto& snap : t.snapshots) {
            std::vector<int> sites = snap.config;
            if (process_for(cfg, q) == ProcessKind::Coarse) {
              const auto sigma = reconstruct(spec, snap.config, recon);
              sites.assign(sigma.begin(), sigma.end());
            }
            auto out = harness_detail::open_out(dir / ("snapshot_" + stem + "_t" + harness_detail::num(snap.t) + ".csv"));
            out << "site,spin\n";
            for (std::size_t x = 0; x < sites.size(); ++x) out << x << ',' << sites[x] << '\n';
          }
        });
      });
    }
  } catch (...) {
    manifest.finish(false);
    throw;
  }
  manifest.finish(true);
}

/// compare: errors.csv (per q) and error_slopes.csv (slope vs realizations).
inline CompareResult cmd_compare(const ExperimentConfig& cfg, int workers) {
  using harness_detail::num;
  cfg.validate();
  const std::filesystem::path dir(cfg.directory);
  prepare_output_dir(dir);
  RunManifest manifest(dir, "compare", cfg);
  CompareResult result;
  manifest.stage("ensembles", [&] { result = run_compare(cfg, workers); });
  {
    auto out = harness_detail::open_out(dir / "errors.csv");
    out << "q,weak,strong,weak_stderr,strong_stderr,relative_weak,relative_strong,realizations,cpu_seconds\n";
    for (std::size_t i = 0; i < result.qs.size(); ++i) {
      const auto& r = result.reports[i];
      out << result.qs[i] << ',' << num(r.weak) << ',' << num(r.strong) << ',' << num(r.weak_stderr) << ','
          << num(r.strong_stderr) << ',' << num(r.relative_weak()) << ',' << num(r.relative_strong()) << ','
          << r.n_realizations << ',' << num(result.cpu_seconds[result.qs[i]]) << '\n';
    }
  }
  {
    auto out = harness_detail::open_out(dir / "error_slopes.csv");
    out << "realizations,weak_slope,weak_half_width,strong_slope,strong_half_width\n";
    for (const auto& row : result.convergence)
      out << row.n_realizations << ',' << num(row.weak.slope) << ',' << num(row.weak.half_width) << ','
          << num(row.strong.slope) << ',' << num(row.strong.half_width) << '\n';
  }
  manifest.finish(true);
  return result;
}

/// exit-times: exit_times.csv (per q) and exit_time_histograms.csv.
inline ExitTimeStudy cmd_exit_times(const ExperimentConfig& cfg, int workers) {
  using harness_detail::num;
  cfg.validate();
  const std::filesystem::path dir(cfg.directory);
  prepare_output_dir(dir);
  RunManifest manifest(dir, "exit-times", cfg);
  ExitTimeStudy study;
  manifest.stage("ensembles", [&] { study = run_exit_times(cfg, workers); });
  {
    auto out = harness_detail::open_out(dir / "exit_times.csv");
    out << "q,mean_tau,relative_error,relative_entropy,crossed,censored_fraction,cpu_seconds\n";
    for (const auto& row : study.rows)
      out << row.q << ',' << num(row.summary.mean) << ',' << num(row.relative_error) << ','
          << num(row.relative_entropy) << ',' << row.summary.n_crossed << ',' << num(row.summary.censored_fraction())
          << ',' << num(row.cpu_seconds) << '\n';
  }
  {
    auto out = harness_detail::open_out(dir / "exit_time_histograms.csv");
    out << "q,bin_lo,bin_hi,probability\n";
    for (const auto& row : study.rows)
      for (std::size_t b = 0; b < row.histogram.n_bins(); ++b)
        out << row.q << ',' << num(row.histogram.bin_edges[b]) << ',' << num(row.histogram.bin_edges[b + 1]) << ','
            << num(row.histogram.probs[b]) << '\n';
  }
  manifest.finish(true);
  return study;
}

/// mean-field: mean_field.csv rows (h, n_roots, root1, root2, root3, degenerate).
inline std::vector<MeanFieldPoint> cmd_mean_field(const ExperimentConfig& cfg) {
  using harness_detail::num;
  cfg.validate();
  const std::filesystem::path dir(cfg.directory);
  prepare_output_dir(dir);
  RunManifest manifest(dir, "mean-field", cfg);
  std::vector<double> grid;
  for (int i = 0; i < cfg.h_steps; ++i)
    grid.push_back(cfg.h_steps == 1 ? cfg.h_min : cfg.h_min + (cfg.h_max - cfg.h_min) * i / (cfg.h_steps - 1));
  std::vector<MeanFieldPoint> points;
  manifest.stage("roots", [&] { points = mean_field_equilibria(cfg.model(), grid); });
  auto out = harness_detail::open_out(dir / "mean_field.csv");
  out << "h,n_roots,root1,root2,root3,degenerate\n";
  for (const auto& p : points) {
    out << num(p.h) << ',' << p.roots.size();
    for (std::size_t r = 0; r < 3; ++r) out << ',' << (r < p.roots.size() ? num(p.roots[r]) : "");
    out << ',' << (p.degenerate ? 1 : 0) << '\n';
  }
  manifest.finish(true);
  return points;
}

/// oracle-check: prints one line per check; true iff all pass.
inline bool cmd_oracle_check(std::ostream& log) {
  bool ok = true;
  for (const auto& c : run_oracle_checks()) {
    log << (c.passed() ? "PASS " : "FAIL ") << c.name << ": " << harness_detail::num(c.value)
        << " (tolerance " << harness_detail::num(c.tolerance) << ")\n";
    ok = ok && c.passed();
  }
  return ok;
}

}  // namespace cgkmc
