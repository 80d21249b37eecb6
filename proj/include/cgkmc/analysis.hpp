// Observables and error metrics over trajectory ensembles.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgkmc/engine.hpp"
#include "cgkmc/lattice.hpp"

namespace cgkmc {

/// Fraction of occupied slots: Σ occ / (units x capacity).
template <typename Occ>
double coverage(std::span<const Occ> occupancy, int capacity = 1) {
  if (occupancy.empty()) throw std::invalid_argument("coverage: empty configuration");
  double sum = 0.0;
  for (auto v : occupancy) sum += static_cast<double>(v);
  return sum / (static_cast<double>(occupancy.size()) * capacity);
}

inline double coverage(const MicroConfig& sigma) { return coverage(std::span<const std::uint8_t>(sigma), 1); }
inline double coverage(const LatticeSpec& spec, const CoarseConfig& eta) {
  return coverage(std::span<const int>(eta), spec.coarse_q());
}

/// Coverage paths of an ensemble on a common time grid: paths[i][j] is
/// realization i at grid point j.
struct CoverageEnsemble {
  double grid_dt = 0.0;
  std::vector<std::vector<double>> paths;

  std::size_t n_realizations() const { return paths.size(); }
  std::size_t n_points() const { return paths.empty() ? 0 : paths.front().size(); }

  static CoverageEnsemble from_trajectories(const std::vector<Trajectory>& runs, double grid_dt) {
    CoverageEnsemble e;
    e.grid_dt = grid_dt;
    for (const auto& run : runs) {
      std::vector<double> path;
      path.reserve(run.samples.size());
      for (const auto& s : run.samples) path.push_back(s.coverage);
      e.paths.push_back(std::move(path));
    }
    return e;
  }
};

struct ErrorReport {
  double weak = 0.0;
  double strong = 0.0;
  /// Standard errors of the time integrals of the paired differences.
  double weak_stderr = 0.0;
  double strong_stderr = 0.0;
  /// ∫ E[c_t] dt of the reference ensemble, used for relative errors.
  double reference_integral = 0.0;
  std::size_t n_realizations = 0;

  double relative_weak() const { return reference_integral > 0.0 ? weak / reference_integral : 0.0; }
  double relative_strong() const { return reference_integral > 0.0 ? strong / reference_integral : 0.0; }
};

/// e_w = Σ_j |mean c_ref(t_j) − mean c_cg(t_j)| Δt,
/// e_s = Σ_j mean |c_ref(t_j) − c_cg(t_j)| Δt,
/// with left-point piecewise-constant quadrature over [0, T). Realizations
/// are paired by index.
inline ErrorReport weak_strong_errors(const CoverageEnsemble& reference, const CoverageEnsemble& coarse) {
  const std::size_t n = reference.n_realizations();
  if (n == 0 || coarse.n_realizations() != n)
    throw std::invalid_argument("weak_strong_errors: ensemble sizes differ or are empty");
  if (reference.grid_dt != coarse.grid_dt || !(reference.grid_dt > 0.0))
    throw std::invalid_argument("weak_strong_errors: time grids differ");
  const std::size_t points = reference.n_points();
  for (std::size_t i = 0; i < n; ++i)
    if (reference.paths[i].size() != points || coarse.paths[i].size() != points)
      throw std::invalid_argument("weak_strong_errors: time grids differ");
  if (points < 2) return {.n_realizations = n};

  const double dt = reference.grid_dt;
  const std::size_t intervals = points - 1;
  ErrorReport report;
  report.n_realizations = n;
  std::vector<double> signed_integral(n, 0.0), abs_integral(n, 0.0);
  for (std::size_t j = 0; j < intervals; ++j) {
    double mean_ref = 0.0, mean_cg = 0.0, mean_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = reference.paths[i][j];
      const double b = coarse.paths[i][j];
      mean_ref += a;
      mean_cg += b;
      mean_abs += std::abs(a - b);
      signed_integral[i] += (a - b) * dt;
      abs_integral[i] += std::abs(a - b) * dt;
    }
    mean_ref /= static_cast<double>(n);
    mean_cg /= static_cast<double>(n);
    mean_abs /= static_cast<double>(n);
    report.weak += std::abs(mean_ref - mean_cg) * dt;
    report.strong += mean_abs * dt;
    report.reference_integral += mean_ref * dt;
  }
  auto stderr_of = [n](const std::vector<double>& v) {
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(n - 1) / static_cast<double>(n));
  };
  report.weak_stderr = stderr_of(signed_integral);
  report.strong_stderr = stderr_of(abs_integral);
  return report;
}

/// Least-squares fit of log(y) = slope log(x) + intercept, with the 95%
/// half-width of the slope from the residual standard error.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;
};

namespace detail {
// two-sided 97.5% Student t quantiles for 1..10 degrees of freedom
inline constexpr double kStudentT975[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228};
}  // namespace detail

inline SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 paired points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_loglog_slope: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: x values are all equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
      sse += r * r;
    }
    const std::size_t dof = n - 2;
    const double t = dof <= 10 ? detail::kStudentT975[dof - 1] : 1.96;
    fit.half_width = t * std::sqrt(sse / static_cast<double>(dof) / sxx);
  }
  return fit;
}

/// τ = inf{t : c_t >= threshold} over the recorded samples; nullopt if the
/// threshold is never reached.
inline std::optional<double> exit_time(std::span<const TrajectorySample> samples, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("exit_time: threshold must lie in (0, 1]");
  for (const auto& s : samples)
    if (s.coverage >= threshold) return s.t;
  return std::nullopt;
}

struct ExitTimeSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_crossed = 0;
  std::size_t n_censored = 0;
  double censored_fraction() const {
    const auto total = n_crossed + n_censored;
    return total ? static_cast<double>(n_censored) / static_cast<double>(total) : 0.0;
  }
  std::vector<double> crossed;
};

/// Mean over realizations that crossed; the others are counted as censored.
inline ExitTimeSummary summarize_exit_times(std::span<const std::optional<double>> times) {
  ExitTimeSummary s;
  double sum = 0.0;
  for (const auto& t : times) {
    if (t) {
      s.crossed.push_back(*t);
      sum += *t;
    } else {
      ++s.n_censored;
    }
  }
  s.n_crossed = s.crossed.size();
  if (s.n_crossed) s.mean = sum / static_cast<double>(s.n_crossed);
  return s;
}

/// Normalized histogram over equal-width bins.
struct EmpiricalDistribution {
  std::vector<double> bin_edges;
  std::vector<double> probs;
  std::size_t n_samples = 0;

  std::size_t n_bins() const { return probs.size(); }
};

/// Equal-width histogram over [lo, hi] (default: sample range); samples
/// equal to hi fall in the last bin and samples outside are rejected.
/// A degenerate range is widened to [v − 0.5, v + 0.5].
inline EmpiricalDistribution histogram(std::span<const double> samples, std::size_t n_bins = 100,
                                       std::optional<std::pair<double, double>> range = std::nullopt) {
  if (n_bins < 1) throw std::invalid_argument("histogram: n_bins must be >= 1");
  if (samples.empty()) throw std::invalid_argument("histogram: no samples");
  double lo, hi;
  if (range) {
    std::tie(lo, hi) = *range;
  } else {
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn;
    hi = *mx;
  }
  if (!(hi >= lo)) throw std::invalid_argument("histogram: empty range");
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  EmpiricalDistribution d;
  d.n_samples = samples.size();
  d.bin_edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i <= n_bins; ++i) d.bin_edges[i] = lo + width * static_cast<double>(i);
  d.bin_edges.back() = hi;
  std::vector<std::size_t> counts(n_bins, 0);
  for (double v : samples) {
    if (v < lo || v > hi) throw std::invalid_argument("histogram: sample outside range");
    auto bin = static_cast<std::size_t>((v - lo) / width);
    if (bin >= n_bins) bin = n_bins - 1;
    ++counts[bin];
  }
  d.probs.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i)
    d.probs[i] = static_cast<double>(counts[i]) / static_cast<double>(samples.size());
  return d;
}

/// Σ p ln(p/r) in nats over bins with p > 0. Returns +infinity when r is zero
/// on a bin where p is not. With smoothing > 0 both histograms get add-α
/// pseudocounts (α = smoothing) before comparison.
inline double relative_entropy(const EmpiricalDistribution& p, const EmpiricalDistribution& r, double smoothing = 0.0) {
  if (p.bin_edges != r.bin_edges) throw std::invalid_argument("relative_entropy: bin edges differ");
  if (smoothing < 0.0) throw std::invalid_argument("relative_entropy: smoothing must be >= 0");
  auto smoothed = [smoothing](const EmpiricalDistribution& d, std::size_t i) {
    if (smoothing == 0.0) return d.probs[i];
    const double n = static_cast<double>(d.n_samples);
    return (d.probs[i] * n + smoothing) / (n + smoothing * static_cast<double>(d.n_bins()));
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < p.n_bins(); ++i) {
    const double pi = smoothed(p, i);
    if (pi <= 0.0) continue;
    const double ri = smoothed(r, i);
    if (ri <= 0.0) return std::numeric_limits<double>::infinity();
    sum += pi * std::log(pi / ri);
  }
  return std::max(sum, 0.0);
}

/// Merges groups of `merge_factor` adjacent bins.
inline EmpiricalDistribution coarsen_histogram(const EmpiricalDistribution& p, std::size_t merge_factor) {
  if (merge_factor < 1 || p.n_bins() % merge_factor != 0)
    throw std::invalid_argument("coarsen_histogram: merge factor must divide the bin count");
  EmpiricalDistribution out;
  out.n_samples = p.n_samples;
  const std::size_t bins = p.n_bins() / merge_factor;
  out.probs.assign(bins, 0.0);
  for (std::size_t i = 0; i < p.n_bins(); ++i) out.probs[i / merge_factor] += p.probs[i];
  for (std::size_t i = 0; i <= bins; ++i) out.bin_edges.push_back(p.bin_edges[i * merge_factor]);
  return out;
}

/// Roots of the mean-field balance at one field value.
struct MeanFieldPoint {
  double h = 0.0;
  std::vector<double> roots;
  /// A double root (tangency) was found; it appears once in `roots`.
  bool degenerate = false;
};

/// Solutions c in [0,1] of (1 − c) = c exp(−beta (j0 c − h)): sign changes
/// on a 10^4-interval mesh refined by bisection to 1e−10. Tangential
/// touches of zero between mesh points are reported as degenerate roots.
inline MeanFieldPoint mean_field_roots(double beta, double j0, double h, int mesh = 10000) {
  auto f = [&](double c) { return (1.0 - c) - c * std::exp(-beta * (j0 * c - h)); };
  MeanFieldPoint point;
  point.h = h;
  auto bisect = [&](double a, double b) {
    double fa = f(a);
    while (b - a > 1e-10) {
      const double m = 0.5 * (a + b);
      const double fm = f(m);
      if ((fm > 0) == (fa > 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  };
  std::vector<double> values(static_cast<std::size_t>(mesh) + 1);
  for (int i = 0; i <= mesh; ++i) values[static_cast<std::size_t>(i)] = f(static_cast<double>(i) / mesh);
  const double step = 1.0 / mesh;
  for (int i = 0; i < mesh; ++i) {
    const double a = values[static_cast<std::size_t>(i)];
    const double b = values[static_cast<std::size_t>(i) + 1];
    if (a == 0.0) {
      point.roots.push_back(i * step);
    } else if ((a > 0) != (b > 0) && b != 0.0) {
      point.roots.push_back(bisect(i * step, (i + 1) * step));
    }
  }
  if (values.back() == 0.0) point.roots.push_back(1.0);
  // tangency: a local extremum of f that touches zero without a sign change
  for (int i = 1; i < mesh; ++i) {
    const double a = values[static_cast<std::size_t>(i) - 1];
    const double b = values[static_cast<std::size_t>(i)];
    const double c = values[static_cast<std::size_t>(i) + 1];
    const bool local_min = b < a && b < c && b > 0.0;
    const bool local_max = b > a && b > c && b < 0.0;
    if (!(local_min || local_max)) continue;
    if (std::abs(b) < 1e-9) {
      point.roots.push_back(i * step);
      point.degenerate = true;
    }
  }
  std::sort(point.roots.begin(), point.roots.end());
  return point;
}

/// Mean-field roots over a grid of field values for the model's beta and j0.
inline std::vector<MeanFieldPoint> mean_field_equilibria(const PotentialModel& model, std::span<const double> h_grid) {
  std::vector<MeanFieldPoint> out;
  out.reserve(h_grid.size());
  for (double h : h_grid) out.push_back(mean_field_roots(model.beta, model.j0, h));
  return out;
}

}  // namespace cgkmc
