// Exhaustive ground truth for tiny lattices: Gibbs measures, dense CTMC
// generators, stationary solves and detailed-balance audits.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cgkmc/engine.hpp"
#include "cgkmc/lattice.hpp"
#include "cgkmc/rates.hpp"

namespace cgkmc::oracle {

/// Dense index of configurations with `n_units` digits in base `radix`
/// (unit 0 is the least significant digit).
class StateIndex {
 public:
  StateIndex(int n_units, int radix) : n_units_(n_units), radix_(radix) {
    if (n_units < 1 || radix < 2) throw std::invalid_argument("StateIndex: bad dimensions");
    size_ = 1;
    for (int i = 0; i < n_units; ++i) {
      if (size_ > (std::uint64_t{1} << 40) / static_cast<std::uint64_t>(radix))
        throw std::length_error("StateIndex: state space too large");
      size_ *= static_cast<std::uint64_t>(radix);
    }
  }

  static StateIndex micro(const LatticeSpec& spec) { return {spec.n_sites(), 2}; }
  static StateIndex coarse(const LatticeSpec& spec) { return {spec.n_cells(), spec.coarse_q() + 1}; }

  std::uint64_t size() const { return size_; }
  int n_units() const { return n_units_; }
  int radix() const { return radix_; }

  std::vector<int> decode(std::uint64_t index) const {
    std::vector<int> config(static_cast<std::size_t>(n_units_));
    for (auto& digit : config) {
      digit = static_cast<int>(index % static_cast<std::uint64_t>(radix_));
      index /= static_cast<std::uint64_t>(radix_);
    }
    return config;
  }

  std::uint64_t encode(std::span<const int> config) const {
    std::uint64_t index = 0;
    for (std::size_t i = config.size(); i-- > 0;) index = index * static_cast<std::uint64_t>(radix_) + static_cast<std::uint64_t>(config[i]);
    return index;
  }

 private:
  int n_units_;
  int radix_;
  std::uint64_t size_ = 0;
};

enum class Level {
  Micro,      // uniform prior on {0,1}^N, microscopic H
  Coarse,     // binomial prior per cell, coarse H̄
  Synthetic,  // uniform prior on {0,1}^N, H̄ of the block projection
};

inline constexpr std::uint64_t kMaxGibbsStates = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kMaxGeneratorStates = std::uint64_t{1} << 14;

namespace detail {

inline MicroConfig to_micro(const std::vector<int>& digits) { return MicroConfig(digits.begin(), digits.end()); }

/// Log of the grouped-mode activity c0/d0 per particle (0 in field mode).
inline double log_activity(const PotentialModel& model) { return model.c0 ? std::log(*model.c0 / model.d0) : 0.0; }

inline Field field_for_energy(const PotentialModel& model, const Field& h) { return model.c0 ? Field(0.0) : h; }

inline double log_binomial_prior(int q, int p) {
  return std::lgamma(q + 1.0) - std::lgamma(p + 1.0) - std::lgamma(q - p + 1.0) - q * std::log(2.0);
}

}  // namespace detail

/// Normalized equilibrium measure exp(-beta H) x prior / Z over every state
/// of the level. In grouped mode each particle carries an extra factor c0/d0.
/// `h` is the site field (its cell average is used by the coarse levels).
inline std::vector<double> gibbs_measure(Level level, const LatticeSpec& spec, const PotentialModel& model,
                                         const Field& h) {
  model.validate();
  const StateIndex index = level == Level::Coarse ? StateIndex::coarse(spec) : StateIndex::micro(spec);
  if (index.size() > kMaxGibbsStates) throw std::length_error("gibbs_measure: state space exceeds 2^20");
  const Field h_site = detail::field_for_energy(model, h);
  h_site.check_size(spec.n_sites(), "gibbs_measure");
  const Field h_cell = h_site.cell_average(spec);
  const double activity = detail::log_activity(model);
  const auto micro_kernel = CouplingKernel::micro(spec, model);
  const auto coarse_kernel = CouplingKernel::coarse(spec, model);

  std::vector<double> log_w(index.size());
  for (std::uint64_t s = 0; s < index.size(); ++s) {
    const auto digits = index.decode(s);
    double lw = 0.0;
    int particles = 0;
    for (int d : digits) particles += d;
    switch (level) {
      case Level::Micro:
        lw = -model.beta * hamiltonian(micro_kernel, detail::to_micro(digits), h_site) - spec.n_sites() * std::log(2.0);
        break;
      case Level::Coarse:
        lw = -model.beta * coarse_hamiltonian(coarse_kernel, digits, h_cell);
        for (int d : digits) lw += detail::log_binomial_prior(spec.coarse_q(), d);
        break;
      case Level::Synthetic:
        lw = -model.beta * coarse_hamiltonian(coarse_kernel, project(spec, detail::to_micro(digits)), h_cell) -
             spec.n_sites() * std::log(2.0);
        break;
    }
    log_w[s] = lw + particles * activity;
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double z = 0.0;
  for (double& v : log_w) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : log_w) v /= z;
  return log_w;
}

/// Dense generator Q of the chosen process: Q(s, s') is the rate of the
/// single event s -> s', rows sum to zero.
inline Eigen::MatrixXd generator_matrix(ProcessKind kind, const LatticeSpec& spec, const PotentialModel& model,
                                        const Field& h) {
  model.validate();
  const StateIndex index = kind == ProcessKind::Coarse ? StateIndex::coarse(spec) : StateIndex::micro(spec);
  if (index.size() > kMaxGeneratorStates) throw std::length_error("generator_matrix: state space exceeds 2^14");
  const auto n = static_cast<Eigen::Index>(index.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  const Field h_cell = h.cell_average(spec);
  for (std::uint64_t s = 0; s < index.size(); ++s) {
    auto digits = index.decode(s);
    RateTable table;
    switch (kind) {
      case ProcessKind::Micro:
        table = micro_rates(spec, model, detail::to_micro(digits), h);
        break;
      case ProcessKind::Coarse:
        table = coarse_rates(spec, model, digits, h_cell);
        break;
      case ProcessKind::Synthetic:
        table = synthetic_rates(spec, model, detail::to_micro(digits), h_cell);
        break;
    }
    double out = 0.0;
    for (std::size_t u = 0; u < table.size(); ++u) {
      for (int delta : {+1, -1}) {
        const double rate = delta > 0 ? table.adsorption(u) : table.desorption(u);
        if (rate == 0.0) continue;
        digits[u] += delta;
        const auto target = static_cast<Eigen::Index>(index.encode(digits));
        digits[u] -= delta;
        q(static_cast<Eigen::Index>(s), target) += rate;
        out += rate;
      }
    }
    q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = -out;
  }
  return q;
}

/// Unique π with πQ = 0 and Σπ = 1 for an irreducible generator.
inline std::vector<double> stationary_distribution(const Eigen::MatrixXd& generator) {
  const Eigen::Index n = generator.rows();
  if (n == 0 || generator.cols() != n) throw std::invalid_argument("stationary_distribution: generator must be square");
  Eigen::MatrixXd a = generator.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::VectorXd x = a.fullPivLu().solve(b);
  std::vector<double> pi(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = x(i);
    if (v < 0.0) {
      if (v < -1e-12) throw std::runtime_error("stationary_distribution: generator is not irreducible");
      v = 0.0;
    }
    pi[static_cast<std::size_t>(i)] = v;
    total += v;
  }
  for (double& v : pi) v /= total;
  const Eigen::Map<const Eigen::RowVectorXd> row(pi.data(), n);
  const double residual = (row * generator).cwiseAbs().maxCoeff();
  if (residual > 1e-10 * std::max(1.0, generator.cwiseAbs().maxCoeff()))
    throw std::runtime_error("stationary_distribution: residual too large");
  return pi;
}

/// max over transitions of |Q(s,s')π(s) − Q(s',s)π(s')| / max of the two fluxes.
inline double detailed_balance_audit(const Eigen::MatrixXd& generator, const std::vector<double>& pi) {
  const Eigen::Index n = generator.rows();
  double worst = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index t = s + 1; t < n; ++t) {
      const double forward = generator(s, t) * pi[static_cast<std::size_t>(s)];
      const double backward = generator(t, s) * pi[static_cast<std::size_t>(t)];
      const double scale = std::max(forward, backward);
      if (scale == 0.0) continue;
      worst = std::max(worst, std::abs(forward - backward) / scale);
    }
  }
  return worst;
}

inline Level equilibrium_level(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::Micro:
      return Level::Micro;
    case ProcessKind::Coarse:
      return Level::Coarse;
    case ProcessKind::Synthetic:
      return Level::Synthetic;
  }
  return Level::Micro;
}

inline double detailed_balance_audit(ProcessKind kind, const LatticeSpec& spec, const PotentialModel& model,
                                     const Field& h) {
  return detailed_balance_audit(generator_matrix(kind, spec, model, h),
                                gibbs_measure(equilibrium_level(kind), spec, model, h));
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& r) {
  if (p.size() != r.size()) throw std::invalid_argument("total_variation: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - r[i]);
  return 0.5 * sum;
}

/// D(p‖r) in nats; +inf when r vanishes where p does not.
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& r) {
  if (p.size() != r.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (r[i] <= 0.0) return std::numeric_limits<double>::infinity();
    sum += p[i] * std::log(p[i] / r[i]);
  }
  return std::max(sum, 0.0);
}

/// T_* μ: image of a measure on {0,1}^N under the block projection.
inline std::vector<double> pushforward(const LatticeSpec& spec, const std::vector<double>& micro) {
  const StateIndex fine = StateIndex::micro(spec);
  const StateIndex coarse = StateIndex::coarse(spec);
  if (micro.size() != fine.size()) throw std::invalid_argument("pushforward: measure size mismatch");
  std::vector<double> out(coarse.size(), 0.0);
  for (std::uint64_t s = 0; s < fine.size(); ++s)
    out[coarse.encode(project(spec, detail::to_micro(fine.decode(s))))] += micro[s];
  return out;
}

struct CellRateGap {
  double exact_adsorption;
  double approx_adsorption;
  double exact_desorption;
  double approx_desorption;
};

/// Per cell: the exact projected rates Σ_{x∈C_k} c(x,σ)(1−σ(x)) and
/// Σ_{x∈C_k} c(x,σ)σ(x) next to the closed coarse rates at η = Tσ.
inline std::vector<CellRateGap> exact_coarse_rate_gap(const LatticeSpec& spec, const PotentialModel& model,
                                                      const MicroConfig& sigma, const Field& h) {
  const RateTable micro = micro_rates(spec, model, sigma, h);
  const RateTable coarse = coarse_rates(spec, model, project(spec, sigma), h.cell_average(spec));
  const int q = spec.coarse_q();
  std::vector<CellRateGap> gaps(static_cast<std::size_t>(spec.n_cells()));
  for (int k = 0; k < spec.n_cells(); ++k) {
    auto& g = gaps[static_cast<std::size_t>(k)];
    g = {0.0, coarse.adsorption(static_cast<std::size_t>(k)), 0.0, coarse.desorption(static_cast<std::size_t>(k))};
    for (int x = k * q; x < (k + 1) * q; ++x) {
      g.exact_adsorption += micro.adsorption(static_cast<std::size_t>(x));
      g.exact_desorption += micro.desorption(static_cast<std::size_t>(x));
    }
  }
  return gaps;
}

}  // namespace cgkmc::oracle
