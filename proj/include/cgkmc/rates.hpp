// Arrhenius adsorption/desorption rates and the two-draw event selection.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "cgkmc/lattice.hpp"
#include "cgkmc/sum_tree.hpp"

namespace cgkmc {

enum class EventKind { Adsorb, Desorb };

struct KmcEvent {
  EventKind kind;
  int location;
  double dt;

  friend bool operator==(const KmcEvent&, const KmcEvent&) = default;
};

enum class TimeStepMode {
  Paper,        // dt = 1 / R_T
  Exponential,  // dt = -ln(u) / R_T with a third uniform draw
};

/// Thrown when every rate vanishes and no event can be selected.
class AbsorbingStateError : public std::runtime_error {
 public:
  AbsorbingStateError() : std::runtime_error("kmc: total rate is zero (absorbing state)") {}
};

/// Per-unit adsorption and desorption rates with running totals.
class RateTable {
 public:
  RateTable() = default;
  explicit RateTable(std::size_t n) : adsorption_(n), desorption_(n) {}

  std::size_t size() const { return adsorption_.size(); }
  double adsorption(std::size_t i) const { return adsorption_.leaf(i); }
  double desorption(std::size_t i) const { return desorption_.leaf(i); }
  std::span<const double> adsorption_rates() const { return adsorption_.leaves(); }
  std::span<const double> desorption_rates() const { return desorption_.leaves(); }
  double total_adsorption() const { return adsorption_.total(); }
  double total_desorption() const { return desorption_.total(); }
  double total() const { return total_adsorption() + total_desorption(); }

  void set_leaf(std::size_t i, double a, double d) {
    adsorption_.set_leaf(i, a);
    desorption_.set_leaf(i, d);
  }
  void refresh(std::size_t lo, std::size_t hi) {
    adsorption_.refresh(lo, hi);
    desorption_.refresh(lo, hi);
  }
  /// Refreshes the ring interval of `count` leaves starting at `first`.
  void refresh_ring(long first, long count) {
    refresh_ring(adsorption_, first, count);
    refresh_ring(desorption_, first, count);
  }

  /// Adsorption at a unit depends on its own occupancy only, so an event
  /// changes one adsorption leaf; these update that tree alone.
  void set_adsorption(std::size_t i, double a) { adsorption_.set(i, a); }
  void set_desorption_leaf(std::size_t i, double d) { desorption_.set_leaf(i, d); }
  void refresh_desorption_ring(long first, long count) { refresh_ring(desorption_, first, count); }

  void rebuild() {
    adsorption_.rebuild();
    desorption_.rebuild();
  }

  const SumTree& adsorption_tree() const { return adsorption_; }
  const SumTree& desorption_tree() const { return desorption_; }

 private:
  static void refresh_ring(SumTree& tree, long first, long count) {
    const long n = static_cast<long>(tree.size());
    if (count >= n) {
      tree.rebuild();
      return;
    }
    first = ((first % n) + n) % n;
    const long last = first + count - 1;
    if (last < n) {
      tree.refresh(static_cast<std::size_t>(first), static_cast<std::size_t>(last));
    } else {
      tree.refresh(static_cast<std::size_t>(first), static_cast<std::size_t>(n - 1));
      tree.refresh(0, static_cast<std::size_t>(last - n));
    }
  }

  SumTree adsorption_;
  SumTree desorption_;
};

/// Rate constants shared by all levels of the hierarchy.
///
/// Field mode: adsorption d0 per free slot, desorption of one particle with
/// interaction sum I is d0 exp(-beta (I - h)).
///
/// Grouped mode (c0 set): the field is folded into the constants so that
/// adsorption is c0 per free slot and desorption d0 exp(-beta I). Only the
/// ratio c0/d0 matters for equilibria; it plays the role of exp(-beta h).
struct ArrheniusConstants {
  double d0 = 1.0;
  double beta = 1.0;
  std::optional<double> c0;

  explicit ArrheniusConstants(const PotentialModel& model) : d0(model.d0), beta(model.beta), c0(model.c0) {}

  double adsorption_prefactor() const { return c0 ? *c0 : d0; }
  /// Field entering the exponent; the grouped constant absorbs it.
  double field(const Field& h, int u) const { return c0 ? 0.0 : h[u]; }

  double adsorption(int capacity, int occ) const { return adsorption_prefactor() * static_cast<double>(capacity - occ); }
  double desorption(int occ, double interaction, double field_value) const {
    if (occ == 0) return 0.0;
    return static_cast<double>(occ) * (d0 * std::exp(-beta * (interaction - field_value)));
  }
};

/// All microscopic rates: adsorption d0 on empty sites,
/// desorption d0 exp(-beta U(x,σ)) on occupied ones (field mode).
inline RateTable micro_rates(const LatticeSpec& spec, const PotentialModel& model, const MicroConfig& sigma,
                             const Field& h) {
  check_micro(spec, sigma);
  h.check_size(spec.n_sites(), "micro_rates");
  const auto kernel = CouplingKernel::micro(spec, model);
  const ArrheniusConstants k(model);
  RateTable table(sigma.size());
  const std::span<const std::uint8_t> occ(sigma);
  for (int x = 0; x < spec.n_sites(); ++x) {
    const int s = sigma[static_cast<std::size_t>(x)];
    const double interaction = s ? static_cast<double>(kernel.interaction_fixed(occ, x)) * kernel.scale() : 0.0;
    table.set_leaf(static_cast<std::size_t>(x), k.adsorption(1, s), k.desorption(s, interaction, k.field(h, x)));
  }
  table.rebuild();
  return table;
}

/// Birth-death rates of the coarse process: d0 (q − η(k)) and
/// d0 η(k) exp(-beta Ū(k,η)).
inline RateTable coarse_rates(const LatticeSpec& spec, const PotentialModel& model, const CoarseConfig& eta,
                              const Field& h_bar) {
  check_coarse(spec, eta);
  h_bar.check_size(spec.n_cells(), "coarse_rates");
  const auto kernel = CouplingKernel::coarse(spec, model);
  const ArrheniusConstants k(model);
  RateTable table(eta.size());
  const std::span<const int> occ(eta);
  for (int c = 0; c < spec.n_cells(); ++c) {
    const int e = eta[static_cast<std::size_t>(c)];
    const double interaction = e ? static_cast<double>(kernel.interaction_fixed(occ, c)) * kernel.scale() : 0.0;
    table.set_leaf(static_cast<std::size_t>(c), k.adsorption(spec.coarse_q(), e),
                   k.desorption(e, interaction, k.field(h_bar, c)));
  }
  table.rebuild();
  return table;
}

/// Site rates of the synthetic process γ: microscopic resolution, coarse
/// potential Ū(k(x), Tγ) looked up piecewise constant per cell.
inline RateTable synthetic_rates(const LatticeSpec& spec, const PotentialModel& model, const MicroConfig& gamma,
                                 const Field& h_bar) {
  const CoarseConfig eta = project(spec, gamma);
  h_bar.check_size(spec.n_cells(), "synthetic_rates");
  const auto kernel = CouplingKernel::coarse(spec, model);
  const ArrheniusConstants k(model);
  RateTable table(gamma.size());
  const std::span<const int> occ(eta);
  for (int x = 0; x < spec.n_sites(); ++x) {
    const int c = spec.cell_of(x);
    const int s = gamma[static_cast<std::size_t>(x)];
    const double interaction = s ? static_cast<double>(kernel.interaction_fixed(occ, c)) * kernel.scale() : 0.0;
    table.set_leaf(static_cast<std::size_t>(x), k.adsorption(1, s), k.desorption(s, interaction, k.field(h_bar, c)));
  }
  table.rebuild();
  return table;
}

/// Event selection: rho1 picks adsorption iff rho1 < R_a / R_T; rho2 locates the
/// smallest unit whose cumulative rate reaches rho2 * R. `rho3` (on (0,1])
/// is used only in exponential mode.
inline KmcEvent select_event(const RateTable& table, double rho1, double rho2, TimeStepMode mode = TimeStepMode::Paper,
                             double rho3 = 1.0) {
  const double r_a = table.total_adsorption();
  const double r_d = table.total_desorption();
  const double r_t = r_a + r_d;
  if (!(r_t > 0.0)) throw AbsorbingStateError();
  const bool adsorb = r_d == 0.0 || (r_a > 0.0 && rho1 < r_a / r_t);
  const SumTree& tree = adsorb ? table.adsorption_tree() : table.desorption_tree();
  const auto location = static_cast<int>(tree.find(rho2 * tree.total()));
  const double dt = mode == TimeStepMode::Paper ? 1.0 / r_t : -std::log(rho3) / r_t;
  return {adsorb ? EventKind::Adsorb : EventKind::Desorb, location, dt};
}

/// Reference implementation of select_event over a linear cumulative scan.
inline KmcEvent select_event_linear(const RateTable& table, double rho1, double rho2,
                                    TimeStepMode mode = TimeStepMode::Paper, double rho3 = 1.0) {
  double r_a = 0.0, r_d = 0.0;
  for (double v : table.adsorption_rates()) r_a += v;
  for (double v : table.desorption_rates()) r_d += v;
  const double r_t = r_a + r_d;
  if (!(r_t > 0.0)) throw AbsorbingStateError();
  const bool adsorb = r_d == 0.0 || (r_a > 0.0 && rho1 < r_a / r_t);
  const auto rates = adsorb ? table.adsorption_rates() : table.desorption_rates();
  const auto location = static_cast<int>(linear_find(rates, rho2 * (adsorb ? r_a : r_d)));
  const double dt = mode == TimeStepMode::Paper ? 1.0 / r_t : -std::log(rho3) / r_t;
  return {adsorb ? EventKind::Adsorb : EventKind::Desorb, location, dt};
}

inline std::string to_string(EventKind kind) { return kind == EventKind::Adsorb ? "adsorb" : "desorb"; }

}  // namespace cgkmc
