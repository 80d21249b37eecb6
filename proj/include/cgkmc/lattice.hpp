// Lattice geometry, pair potentials and Hamiltonians for 1-D adsorption /
// desorption spin systems with block-spin coarse graining.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgkmc/rng.hpp"

namespace cgkmc {

/// Periodic 1-D lattice of N sites partitioned into M = N/q contiguous
/// cells [kq, (k+1)q), with pair interactions of half-width L.
class LatticeSpec {
 public:
  LatticeSpec(int n_sites, int coarse_q, int interaction_range)
      : n_sites_(n_sites), coarse_q_(coarse_q), interaction_range_(interaction_range) {
    if (n_sites < 1) throw std::invalid_argument("LatticeSpec: n_sites must be positive");
    if (coarse_q < 1 || coarse_q > n_sites)
      throw std::invalid_argument("LatticeSpec: coarse_q must lie in [1, n_sites]");
    if (n_sites % coarse_q != 0)
      throw std::invalid_argument("LatticeSpec: coarse_q=" + std::to_string(coarse_q) +
                                  " does not divide n_sites=" + std::to_string(n_sites));
    if (interaction_range < 1 || 2 * interaction_range > n_sites)
      throw std::invalid_argument("LatticeSpec: interaction_range must lie in [1, n_sites/2]");
    n_cells_ = n_sites / coarse_q;
  }

  int n_sites() const { return n_sites_; }
  int coarse_q() const { return coarse_q_; }
  int n_cells() const { return n_cells_; }
  int interaction_range() const { return interaction_range_; }

  int cell_of(int x) const { return x / coarse_q_; }
  int first_site(int k) const { return k * coarse_q_; }

  /// Minimal-image distance on the ring of n points.
  static int ring_distance(int a, int b, int n) {
    int d = std::abs(a - b) % n;
    return std::min(d, n - d);
  }
  int site_distance(int x, int y) const { return ring_distance(x, y, n_sites_); }

  /// Same lattice with a different coarse-graining ratio.
  LatticeSpec with_q(int q) const { return LatticeSpec(n_sites_, q, interaction_range_); }

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;

 private:
  int n_sites_;
  int coarse_q_;
  int n_cells_ = 0;
  int interaction_range_;
};

enum class PotentialShape { Uniform };

/// Pair potential J(r) = V(r/L)/L with compactly supported even V, together
/// with the kinetic constants of the Arrhenius dynamics.
///
/// When `c0` is set the rates run in grouped mode: c0 replaces d0 as the
/// adsorption constant and the per-site field is not used (see rates.hpp).
struct PotentialModel {
  double j0 = 0.0;
  PotentialShape shape = PotentialShape::Uniform;
  double beta = 1.0;
  double d0 = 1.0;
  std::optional<double> c0;

  void validate() const {
    if (!std::isfinite(j0)) throw std::invalid_argument("PotentialModel: j0 must be finite");
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("PotentialModel: beta must be >= 0");
    if (!(d0 > 0.0) || !std::isfinite(d0)) throw std::invalid_argument("PotentialModel: d0 must be > 0");
    if (c0 && (!(*c0 > 0.0) || !std::isfinite(*c0)))
      throw std::invalid_argument("PotentialModel: c0 must be > 0");
  }

  /// V(r) on |r| <= 1. Uniform: height j0/2 so that the 2L in-range
  /// neighbours of a site carry total coupling j0.
  double shape_value(double r) const {
    if (std::abs(r) > 1.0) return 0.0;
    switch (shape) {
      case PotentialShape::Uniform:
        return 0.5 * j0;
    }
    return 0.0;
  }
};

/// J at periodic minimal distance `dist` (0 <= dist <= N/2).
inline double j_value(const LatticeSpec& spec, const PotentialModel& model, int dist) {
  const int range = spec.interaction_range();
  if (dist <= 0 || dist > range) return 0.0;
  return model.shape_value(static_cast<double>(dist) / range) / range;
}

/// Per-site (or per-cell) external field; a single value broadcasts.
class Field {
 public:
  Field() : values_{0.0} {}
  Field(double constant) : values_{constant} {}  // NOLINT: implicit broadcast
  explicit Field(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("Field: empty value array");
  }

  double operator[](int i) const { return values_.size() == 1 ? values_[0] : values_[static_cast<std::size_t>(i)]; }
  bool is_constant() const { return values_.size() == 1; }
  std::size_t size() const { return values_.size(); }

  void check_size(int n, const char* what) const {
    if (values_.size() != 1 && values_.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument(std::string(what) + ": field length mismatch");
  }

  /// Cell averages h̄(k) of a site field.
  Field cell_average(const LatticeSpec& spec) const {
    if (is_constant()) return *this;
    check_size(spec.n_sites(), "Field::cell_average");
    std::vector<double> avg(static_cast<std::size_t>(spec.n_cells()));
    const int q = spec.coarse_q();
    for (int k = 0; k < spec.n_cells(); ++k) {
      double sum = 0.0;
      for (int x = k * q; x < (k + 1) * q; ++x) sum += values_[static_cast<std::size_t>(x)];
      avg[static_cast<std::size_t>(k)] = sum / q;
    }
    return Field(std::move(avg));
  }

 private:
  std::vector<double> values_;
};

/// Translation-invariant couplings on a ring of `n_units` units (sites, or
/// cells for the coarse kernel), stored as fixed-point integers so that
/// interaction sums are exact and independent of the order of updates.
///
/// value(o) couples unit i with unit i+o (mod n); `self` multiplies
/// (occ(i) - 1) and is zero for the microscopic kernel.
class CouplingKernel {
 public:
  CouplingKernel() = default;

  int n_units() const { return n_units_; }
  double scale() const { return scale_; }
  std::span<const int> offsets() const { return offsets_; }
  std::span<const std::int64_t> fixed_weights() const { return fixed_; }
  std::int64_t self_fixed() const { return self_fixed_; }
  double self_value() const { return static_cast<double>(self_fixed_) * scale_; }
  double weight(std::size_t i) const { return static_cast<double>(fixed_[i]) * scale_; }
  /// Largest minimal-image offset with a nonzero coupling.
  int reach() const { return reach_; }

  /// Coupling at ring offset o (0 < o < n).
  double value_at(int o) const {
    for (std::size_t i = 0; i < offsets_.size(); ++i)
      if (offsets_[i] == o) return weight(i);
    return 0.0;
  }

  /// Σ_o w(o) occ(i+o) + self (occ(i) - 1), exact in units of scale().
  template <typename Occ>
  std::int64_t interaction_fixed(std::span<const Occ> occ, int i) const {
    std::int64_t acc = self_fixed_ * (static_cast<std::int64_t>(occ[static_cast<std::size_t>(i)]) - 1);
    for (std::size_t j = 0; j < offsets_.size(); ++j) {
      int u = i + offsets_[j];
      if (u >= n_units_) u -= n_units_;
      acc += fixed_[j] * static_cast<std::int64_t>(occ[static_cast<std::size_t>(u)]);
    }
    return acc;
  }

  static CouplingKernel micro(const LatticeSpec& spec, const PotentialModel& model) {
    const int n = spec.n_sites();
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    for (int o = 1; o < n; ++o) w[static_cast<std::size_t>(o)] = j_value(spec, model, LatticeSpec::ring_distance(0, o, n));
    return CouplingKernel(n, w, 0.0, scale_for(spec, model));
  }

  /// Cell-averaged couplings J̄ for the lattice's coarse_q.
  static CouplingKernel coarse(const LatticeSpec& spec, const PotentialModel& model) {
    const int q = spec.coarse_q();
    const int m = spec.n_cells();
    const int n = spec.n_sites();
    const int range = spec.interaction_range();
    std::vector<double> w(static_cast<std::size_t>(m), 0.0);
    const double inv_q2 = 1.0 / (static_cast<double>(q) * q);
    for (int o = 1; o < m; ++o) {
      // cells farther than range + q apart cannot interact
      const int cell_dist = LatticeSpec::ring_distance(0, o, m);
      if ((cell_dist - 1) * q > range) continue;
      double sum = 0.0;
      for (int x = 0; x < q; ++x)
        for (int y = o * q; y < (o + 1) * q; ++y) sum += j_value(spec, model, LatticeSpec::ring_distance(x, y, n));
      w[static_cast<std::size_t>(o)] = sum * inv_q2;
    }
    double self = 0.0;
    if (q > 1) {
      double sum = 0.0;
      for (int x = 0; x < q; ++x)
        for (int y = 0; y < q; ++y)
          if (x != y) sum += j_value(spec, model, LatticeSpec::ring_distance(x, y, n));
      self = sum / (static_cast<double>(q) * (q - 1));
    }
    return CouplingKernel(m, w, self, scale_for(spec, model));
  }

 private:
  CouplingKernel(int n_units, const std::vector<double>& w, double self, double scale)
      : n_units_(n_units), scale_(scale) {
    for (int o = 1; o < n_units; ++o) {
      const std::int64_t f = quantize(w[static_cast<std::size_t>(o)]);
      if (f == 0) continue;
      offsets_.push_back(o);
      fixed_.push_back(f);
      reach_ = std::max(reach_, LatticeSpec::ring_distance(0, o, n_units));
    }
    self_fixed_ = quantize(self);
  }

  std::int64_t quantize(double v) const { return std::llround(v / scale_); }

  // Power-of-two grid shared by the micro and coarse kernels of one model;
  // total |coupling| stays below 2^58 grid units.
  static double scale_for(const LatticeSpec& spec, const PotentialModel& model) {
    double total = 0.0;
    for (int o = 1; o < spec.n_sites(); ++o)
      total += std::abs(j_value(spec, model, LatticeSpec::ring_distance(0, o, spec.n_sites())));
    if (total == 0.0) return 1.0;
    return std::ldexp(1.0, std::ilogb(total) + 1 - 58);
  }

  int n_units_ = 0;
  double scale_ = 1.0;
  std::vector<int> offsets_;
  std::vector<std::int64_t> fixed_;
  std::int64_t self_fixed_ = 0;
  int reach_ = 0;
};

using MicroConfig = std::vector<std::uint8_t>;
using CoarseConfig = std::vector<int>;

inline void check_micro(const LatticeSpec& spec, const MicroConfig& sigma) {
  if (sigma.size() != static_cast<std::size_t>(spec.n_sites()))
    throw std::invalid_argument("MicroConfig: length does not match n_sites");
  for (auto s : sigma)
    if (s > 1) throw std::invalid_argument("MicroConfig: spins must be 0 or 1");
}

inline void check_coarse(const LatticeSpec& spec, const CoarseConfig& eta) {
  if (eta.size() != static_cast<std::size_t>(spec.n_cells()))
    throw std::invalid_argument("CoarseConfig: length does not match n_cells");
  for (int v : eta)
    if (v < 0 || v > spec.coarse_q()) throw std::invalid_argument("CoarseConfig: block value outside [0, q]");
}

/// U(x,σ) = Σ_{y≠x} J(x−y)σ(y) − h(x).
inline double micro_field_u(const CouplingKernel& kernel, const MicroConfig& sigma, int x, const Field& h) {
  return static_cast<double>(kernel.interaction_fixed(std::span<const std::uint8_t>(sigma), x)) * kernel.scale() - h[x];
}

inline double micro_field_u(const LatticeSpec& spec, const PotentialModel& model, const MicroConfig& sigma, int x,
                            const Field& h) {
  return micro_field_u(CouplingKernel::micro(spec, model), sigma, x, h);
}

/// Ū(k,η) = Σ_{l≠k} J̄(k,l)η(l) + J̄(k,k)(η(k)−1) − h̄(k).
inline double coarse_field_u(const CouplingKernel& kernel, const CoarseConfig& eta, int k, const Field& h_bar) {
  return static_cast<double>(kernel.interaction_fixed(std::span<const int>(eta), k)) * kernel.scale() - h_bar[k];
}

inline double coarse_field_u(const LatticeSpec& spec, const PotentialModel& model, const CoarseConfig& eta, int k,
                             const Field& h_bar) {
  return coarse_field_u(CouplingKernel::coarse(spec, model), eta, k, h_bar);
}

/// J̄(k,l): the averaged coupling between cells k and l (J̄(k,k) is the
/// within-cell average, 0 at q = 1).
inline double coarse_j(const LatticeSpec& spec, const PotentialModel& model, int k, int l) {
  const int q = spec.coarse_q();
  double sum = 0.0;
  for (int x = k * q; x < (k + 1) * q; ++x)
    for (int y = l * q; y < (l + 1) * q; ++y)
      if (x != y) sum += j_value(spec, model, spec.site_distance(x, y));
  if (k != l) return sum / (static_cast<double>(q) * q);
  if (q == 1) return 0.0;
  return sum / (static_cast<double>(q) * (q - 1));
}

/// H(σ) = −½ ΣΣ J(x−y)σ(x)σ(y) + Σ h(x)σ(x).
inline double hamiltonian(const CouplingKernel& kernel, const MicroConfig& sigma, const Field& h) {
  const std::span<const std::uint8_t> occ(sigma);
  std::int64_t pair_fixed = 0;
  double field = 0.0;
  for (int x = 0; x < static_cast<int>(sigma.size()); ++x) {
    if (!sigma[static_cast<std::size_t>(x)]) continue;
    pair_fixed += kernel.interaction_fixed(occ, x);
    field += h[x];
  }
  return -0.5 * static_cast<double>(pair_fixed) * kernel.scale() + field;
}

inline double hamiltonian(const LatticeSpec& spec, const PotentialModel& model, const MicroConfig& sigma,
                          const Field& h) {
  return hamiltonian(CouplingKernel::micro(spec, model), sigma, h);
}

/// H̄(η) = −½ Σ_l Σ_{k≠l} J̄(k,l)η(k)η(l) − ½ J̄(k,k) Σ_l η(l)(η(l)−1) + Σ_l h̄(l)η(l).
inline double coarse_hamiltonian(const CouplingKernel& kernel, const CoarseConfig& eta, const Field& h_bar) {
  const std::span<const int> occ(eta);
  // interaction_fixed(l) already includes the self term J̄(k,k)(η(l)−1).
  std::int64_t pair_fixed = 0;
  double field = 0.0;
  for (int l = 0; l < static_cast<int>(eta.size()); ++l) {
    const int e = eta[static_cast<std::size_t>(l)];
    if (e == 0) continue;
    pair_fixed += static_cast<std::int64_t>(e) * kernel.interaction_fixed(occ, l);
    field += h_bar[l] * e;
  }
  return -0.5 * static_cast<double>(pair_fixed) * kernel.scale() + field;
}

inline double coarse_hamiltonian(const LatticeSpec& spec, const PotentialModel& model, const CoarseConfig& eta,
                                 const Field& h_bar) {
  return coarse_hamiltonian(CouplingKernel::coarse(spec, model), eta, h_bar);
}

/// Block spin η(k) = Σ_{x∈C_k} σ(x).
inline CoarseConfig project(const LatticeSpec& spec, const MicroConfig& sigma) {
  check_micro(spec, sigma);
  const int q = spec.coarse_q();
  CoarseConfig eta(static_cast<std::size_t>(spec.n_cells()), 0);
  for (int x = 0; x < spec.n_sites(); ++x) eta[static_cast<std::size_t>(x / q)] += sigma[static_cast<std::size_t>(x)];
  return eta;
}

/// Places η(k) particles uniformly without replacement inside each cell.
inline MicroConfig reconstruct(const LatticeSpec& spec, const CoarseConfig& eta, RandomStream& rng) {
  check_coarse(spec, eta);
  const int q = spec.coarse_q();
  MicroConfig sigma(static_cast<std::size_t>(spec.n_sites()), 0);
  std::vector<int> slots(static_cast<std::size_t>(q));
  for (int k = 0; k < spec.n_cells(); ++k) {
    std::iota(slots.begin(), slots.end(), 0);
    const int count = eta[static_cast<std::size_t>(k)];
    // partial Fisher-Yates: the first `count` slots become occupied
    for (int i = 0; i < count; ++i) {
      const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(q - i)));
      std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(j)]);
      sigma[static_cast<std::size_t>(k * q + slots[static_cast<std::size_t>(i)])] = 1;
    }
  }
  return sigma;
}

}  // namespace cgkmc
