// Kinetic Monte Carlo for the microscopic, coarse-grained and synthetic
// adsorption/desorption processes.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgkmc/lattice.hpp"
#include "cgkmc/rates.hpp"
#include "cgkmc/rng.hpp"

namespace cgkmc {

enum class ProcessKind { Micro, Coarse, Synthetic };

enum class UpdateMode {
  Local,   // patch the entries within interaction range of the event
  Global,  // recompute every rate after each event
};

/// Thrown when an event is illegal for the configuration it is applied to
/// (adsorption into a full unit, desorption from an empty one).
class IllegalEventError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void apply_event(MicroConfig& sigma, const KmcEvent& event) {
  auto& s = sigma.at(static_cast<std::size_t>(event.location));
  if (event.kind == EventKind::Adsorb) {
    if (s != 0) throw IllegalEventError("apply_event: adsorption on an occupied site");
    s = 1;
  } else {
    if (s != 1) throw IllegalEventError("apply_event: desorption from an empty site");
    s = 0;
  }
}

inline void apply_event(CoarseConfig& eta, int q, const KmcEvent& event) {
  auto& e = eta.at(static_cast<std::size_t>(event.location));
  if (event.kind == EventKind::Adsorb) {
    if (e >= q) throw IllegalEventError("apply_event: adsorption into a full cell");
    ++e;
  } else {
    if (e <= 0) throw IllegalEventError("apply_event: desorption from an empty cell");
    --e;
  }
}

/// Spin-flip or birth-death dynamics on a ring of units of capacity
/// `capacity` (1 for sites, q for cells). Interaction sums are maintained
/// incrementally in the kernel's fixed-point units.
class BlockProcess {
 public:
  BlockProcess(CouplingKernel kernel, int capacity, std::vector<int> occupancy, Field field,
               const PotentialModel& model)
      : kernel_(std::move(kernel)),
        capacity_(capacity),
        occ_(std::move(occupancy)),
        field_(std::move(field)),
        constants_(model),
        table_(occ_.size()) {
    if (static_cast<int>(occ_.size()) != kernel_.n_units())
      throw std::invalid_argument("BlockProcess: occupancy length does not match kernel");
    field_.check_size(kernel_.n_units(), "BlockProcess");
    for (int v : occ_)
      if (v < 0 || v > capacity_) throw std::invalid_argument("BlockProcess: occupancy outside [0, capacity]");
    recompute_all();
  }

  static BlockProcess micro(const LatticeSpec& spec, const PotentialModel& model, const MicroConfig& sigma,
                            const Field& h) {
    check_micro(spec, sigma);
    return BlockProcess(CouplingKernel::micro(spec, model), 1, std::vector<int>(sigma.begin(), sigma.end()), h,
                        model);
  }
  static BlockProcess coarse(const LatticeSpec& spec, const PotentialModel& model, const CoarseConfig& eta,
                             const Field& h_bar) {
    check_coarse(spec, eta);
    return BlockProcess(CouplingKernel::coarse(spec, model), spec.coarse_q(), eta, h_bar, model);
  }

  const RateTable& rates() const { return table_; }
  std::span<const int> occupancy() const { return occ_; }
  double coverage() const { return static_cast<double>(particles_) / (static_cast<double>(occ_.size()) * capacity_); }
  std::int64_t interaction_fixed(int u) const { return acc_[static_cast<std::size_t>(u)]; }

  void apply(const KmcEvent& event, UpdateMode mode) {
    const int u = event.location;
    if (u < 0 || u >= static_cast<int>(occ_.size())) throw IllegalEventError("BlockProcess: location out of range");
    int& e = occ_[static_cast<std::size_t>(u)];
    const int delta = event.kind == EventKind::Adsorb ? 1 : -1;
    if (e + delta < 0 || e + delta > capacity_)
      throw IllegalEventError(event.kind == EventKind::Adsorb ? "BlockProcess: adsorption into a full unit"
                                                              : "BlockProcess: desorption from an empty unit");
    e += delta;
    particles_ += delta;
    if (mode == UpdateMode::Global) {
      recompute_all();
      return;
    }
    const int n = static_cast<int>(occ_.size());
    const auto offsets = kernel_.offsets();
    const auto weights = kernel_.fixed_weights();
    acc_[static_cast<std::size_t>(u)] += delta * kernel_.self_fixed();
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      int v = u - offsets[j];
      if (v < 0) v += n;
      acc_[static_cast<std::size_t>(v)] += delta * weights[j];
    }
    const int reach = kernel_.reach();
    if (2 * reach + 1 >= n) {
      for (int v = 0; v < n; ++v) write_leaf(v);
      table_.rebuild();
    } else {
      table_.set_adsorption(static_cast<std::size_t>(u), constants_.adsorption(capacity_, e));
      for (int d = -reach; d <= reach; ++d) write_desorption((u + d + n) % n);
      table_.refresh_desorption_ring(u - reach, 2 * reach + 1);
    }
  }

  /// Interaction sums and all rates from scratch.
  void recompute_all() {
    const std::span<const int> occ(occ_);
    acc_.resize(occ_.size());
    particles_ = 0;
    for (int u = 0; u < static_cast<int>(occ_.size()); ++u) {
      acc_[static_cast<std::size_t>(u)] = kernel_.interaction_fixed(occ, u);
      particles_ += occ_[static_cast<std::size_t>(u)];
      write_leaf(u);
    }
    table_.rebuild();
  }

 private:
  void write_leaf(int u) {
    const int e = occ_[static_cast<std::size_t>(u)];
    const double interaction = static_cast<double>(acc_[static_cast<std::size_t>(u)]) * kernel_.scale();
    table_.set_leaf(static_cast<std::size_t>(u), constants_.adsorption(capacity_, e),
                    constants_.desorption(e, interaction, constants_.field(field_, u)));
  }
  void write_desorption(int u) {
    const double interaction = static_cast<double>(acc_[static_cast<std::size_t>(u)]) * kernel_.scale();
    table_.set_desorption_leaf(static_cast<std::size_t>(u),
                               constants_.desorption(occ_[static_cast<std::size_t>(u)], interaction,
                                                     constants_.field(field_, u)));
  }

  CouplingKernel kernel_;
  int capacity_;
  std::vector<int> occ_;
  std::vector<std::int64_t> acc_;
  Field field_;
  ArrheniusConstants constants_;
  RateTable table_;
  std::int64_t particles_ = 0;
};

/// Microscopic configuration γ evolved with coarse-grained rates; its block
/// projection follows the coarse process.
class SyntheticProcess {
 public:
  SyntheticProcess(const LatticeSpec& spec, const PotentialModel& model, MicroConfig gamma, Field h_bar)
      : spec_(spec),
        kernel_(CouplingKernel::coarse(spec, model)),
        gamma_(std::move(gamma)),
        field_(std::move(h_bar)),
        constants_(model),
        table_(static_cast<std::size_t>(spec.n_sites())) {
    check_micro(spec, gamma_);
    field_.check_size(spec.n_cells(), "SyntheticProcess");
    recompute_all();
  }

  const RateTable& rates() const { return table_; }
  const MicroConfig& config() const { return gamma_; }
  std::span<const int> blocks() const { return eta_; }
  double coverage() const { return static_cast<double>(particles_) / spec_.n_sites(); }

  void apply(const KmcEvent& event, UpdateMode mode) {
    const int x = event.location;
    if (x < 0 || x >= spec_.n_sites()) throw IllegalEventError("SyntheticProcess: location out of range");
    apply_event(gamma_, event);
    const int delta = event.kind == EventKind::Adsorb ? 1 : -1;
    const int k = spec_.cell_of(x);
    eta_[static_cast<std::size_t>(k)] += delta;
    particles_ += delta;
    if (mode == UpdateMode::Global) {
      recompute_all();
      return;
    }
    const int m = spec_.n_cells();
    const auto offsets = kernel_.offsets();
    const auto weights = kernel_.fixed_weights();
    acc_[static_cast<std::size_t>(k)] += delta * kernel_.self_fixed();
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      int l = k - offsets[j];
      if (l < 0) l += m;
      acc_[static_cast<std::size_t>(l)] += delta * weights[j];
    }
    const int reach = kernel_.reach();
    const int q = spec_.coarse_q();
    if (2 * reach + 1 >= m) {
      for (int c = 0; c < m; ++c) write_cell(c);
      table_.rebuild();
    } else {
      table_.set_adsorption(static_cast<std::size_t>(x), constants_.adsorption(1, gamma_[static_cast<std::size_t>(x)]));
      for (int d = -reach; d <= reach; ++d) write_cell((k + d + m) % m, false);
      table_.refresh_desorption_ring(static_cast<long>(k - reach) * q, static_cast<long>(2 * reach + 1) * q);
    }
  }

  void recompute_all() {
    eta_ = project(spec_, gamma_);
    particles_ = 0;
    for (int v : eta_) particles_ += v;
    const std::span<const int> occ(eta_);
    acc_.resize(eta_.size());
    for (int c = 0; c < spec_.n_cells(); ++c) {
      acc_[static_cast<std::size_t>(c)] = kernel_.interaction_fixed(occ, c);
      write_cell(c);
    }
    table_.rebuild();
  }

 private:
  void write_cell(int c, bool with_adsorption = true) {
    const double interaction = static_cast<double>(acc_[static_cast<std::size_t>(c)]) * kernel_.scale();
    const double occupied_rate = constants_.desorption(1, interaction, constants_.field(field_, c));
    const int q = spec_.coarse_q();
    for (int x = c * q; x < (c + 1) * q; ++x) {
      const int s = gamma_[static_cast<std::size_t>(x)];
      if (with_adsorption)
        table_.set_leaf(static_cast<std::size_t>(x), constants_.adsorption(1, s), s ? occupied_rate : 0.0);
      else
        table_.set_desorption_leaf(static_cast<std::size_t>(x), s ? occupied_rate : 0.0);
    }
  }

  LatticeSpec spec_;
  CouplingKernel kernel_;
  MicroConfig gamma_;
  CoarseConfig eta_;
  std::vector<std::int64_t> acc_;
  Field field_;
  ArrheniusConstants constants_;
  RateTable table_;
  std::int64_t particles_ = 0;
};

/// Rate table after `event`, recomputing only entries whose field changes.
/// `config` is the pre-event microscopic configuration (Micro, Synthetic)
/// or block configuration (Coarse); `table` must be its exact rate table.
/// `h` is the site field for Micro and the cell field for the others.
inline RateTable local_update(ProcessKind kind, const LatticeSpec& spec, const PotentialModel& model,
                              std::span<const int> config, RateTable table, const KmcEvent& event, const Field& h) {
  const ArrheniusConstants k(model);
  std::vector<int> occ(config.begin(), config.end());
  const int delta = event.kind == EventKind::Adsorb ? 1 : -1;
  const int capacity = kind == ProcessKind::Coarse ? spec.coarse_q() : 1;
  int& target = occ.at(static_cast<std::size_t>(event.location));
  if (target + delta < 0 || target + delta > capacity) throw IllegalEventError("local_update: illegal event");
  target += delta;

  if (kind == ProcessKind::Synthetic) {
    const auto kernel = CouplingKernel::coarse(spec, model);
    const int q = spec.coarse_q();
    const int m = spec.n_cells();
    CoarseConfig eta(static_cast<std::size_t>(m), 0);
    for (int x = 0; x < spec.n_sites(); ++x) eta[static_cast<std::size_t>(x / q)] += occ[static_cast<std::size_t>(x)];
    const int cell = event.location / q;
    const int reach = std::min(kernel.reach(), m / 2);
    for (int d = -reach; d <= reach; ++d) {
      const int c = ((cell + d) % m + m) % m;
      const double interaction =
          static_cast<double>(kernel.interaction_fixed(std::span<const int>(eta), c)) * kernel.scale();
      for (int x = c * q; x < (c + 1) * q; ++x) {
        const int s = occ[static_cast<std::size_t>(x)];
        table.set_leaf(static_cast<std::size_t>(x), k.adsorption(1, s), k.desorption(s, interaction, k.field(h, c)));
      }
    }
    table.refresh_ring(static_cast<long>(cell - reach) * q, static_cast<long>(2 * reach + 1) * q);
    return table;
  }

  const auto kernel = kind == ProcessKind::Micro ? CouplingKernel::micro(spec, model) : CouplingKernel::coarse(spec, model);
  const int n = kernel.n_units();
  const int reach = std::min(kernel.reach(), n / 2);
  for (int d = -reach; d <= reach; ++d) {
    const int u = ((event.location + d) % n + n) % n;
    const int e = occ[static_cast<std::size_t>(u)];
    const double interaction =
        static_cast<double>(kernel.interaction_fixed(std::span<const int>(occ), u)) * kernel.scale();
    table.set_leaf(static_cast<std::size_t>(u), k.adsorption(capacity, e), k.desorption(e, interaction, k.field(h, u)));
  }
  table.refresh_ring(event.location - reach, 2 * reach + 1);
  return table;
}

struct TrajectorySample {
  double t;
  double coverage;

  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

/// Configuration at a requested time: sites for Micro/Synthetic, blocks for Coarse.
struct Snapshot {
  double t;
  std::vector<int> config;
};

struct RunOptions {
  double t_final = 0.0;
  /// Output grid spacing; unset records every event.
  std::optional<double> sampling_dt;
  TimeStepMode time_step = TimeStepMode::Paper;
  UpdateMode updating = UpdateMode::Local;
  /// Stop as soon as coverage reaches this value (exit-time runs).
  std::optional<double> stop_at_coverage;
  std::vector<double> snapshot_times;
  bool record_events = false;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<Snapshot> snapshots;
  std::vector<KmcEvent> events;
  std::uint64_t n_events = 0;
  /// Time of the last applied event (0 if none).
  double last_event_time = 0.0;
  /// First time coverage >= stop_at_coverage, when requested and reached.
  std::optional<double> first_passage;
};

template <typename P>
concept KmcDynamics = requires(P p, const P cp, const KmcEvent& e, UpdateMode m) {
  { cp.rates() } -> std::convertible_to<const RateTable&>;
  { cp.coverage() } -> std::convertible_to<double>;
  p.apply(e, m);
};

namespace detail {

inline std::vector<int> snapshot_of(const BlockProcess& p) { return {p.occupancy().begin(), p.occupancy().end()}; }
inline std::vector<int> snapshot_of(const SyntheticProcess& p) { return {p.config().begin(), p.config().end()}; }

}  // namespace detail

/// Runs the KMC loop until t_final. Random draws per step, in order:
/// rho1 (adsorb/desorb), rho2 (location), and in exponential mode rho3
/// (waiting time). The event at time t + dt is applied only if
/// t + dt <= t_final.
template <KmcDynamics P>
Trajectory run_dynamics(P& process, const RunOptions& options, RandomStream& rng) {
  if (!(options.t_final >= 0.0)) throw std::invalid_argument("run_trajectory: t_final must be >= 0");
  if (options.sampling_dt && !(*options.sampling_dt > 0.0))
    throw std::invalid_argument("run_trajectory: sampling_dt must be > 0");
  Trajectory out;
  std::vector<double> snap_times = options.snapshot_times;
  std::sort(snap_times.begin(), snap_times.end());
  std::size_t next_snap = 0;
  std::uint64_t next_grid = 0;
  const double grid_dt = options.sampling_dt.value_or(0.0);
  const std::uint64_t grid_count =
      options.sampling_dt ? static_cast<std::uint64_t>(std::floor(options.t_final / grid_dt * (1.0 + 1e-12))) + 1 : 0;

  // Records every grid point and snapshot strictly before `t_next`.
  auto record_until = [&](double t_next) {
    if (options.sampling_dt) {
      while (next_grid < grid_count && static_cast<double>(next_grid) * grid_dt < t_next) {
        out.samples.push_back({static_cast<double>(next_grid) * grid_dt, process.coverage()});
        ++next_grid;
      }
    }
    while (next_snap < snap_times.size() && snap_times[next_snap] < t_next) {
      if (snap_times[next_snap] <= options.t_final)
        out.snapshots.push_back({snap_times[next_snap], detail::snapshot_of(process)});
      ++next_snap;
    }
  };

  double t = 0.0;
  if (!options.sampling_dt) out.samples.push_back({0.0, process.coverage()});
  if (options.stop_at_coverage && process.coverage() >= *options.stop_at_coverage) {
    out.first_passage = 0.0;
    record_until(0.0);
    return out;
  }
  while (true) {
    const double rho1 = rng.uniform();
    const double rho2 = rng.uniform();
    const double rho3 = options.time_step == TimeStepMode::Exponential ? rng.uniform_open_zero() : 1.0;
    const KmcEvent event = select_event(process.rates(), rho1, rho2, options.time_step, rho3);
    const double t_next = t + event.dt;
    if (t_next > options.t_final) {
      record_until(std::nextafter(options.t_final, INFINITY));
      break;
    }
    record_until(t_next);
    process.apply(event, options.updating);
    t = t_next;
    ++out.n_events;
    out.last_event_time = t;
    if (options.record_events) out.events.push_back(event);
    if (!options.sampling_dt) out.samples.push_back({t, process.coverage()});
    if (options.stop_at_coverage && process.coverage() >= *options.stop_at_coverage) {
      out.first_passage = t;
      break;
    }
  }
  return out;
}

/// One realization of the chosen process from the microscopic initial state
/// `sigma0` (projected for Coarse). `h` is the site field; cell averages are
/// taken for the coarse levels.
inline Trajectory run_trajectory(ProcessKind kind, const LatticeSpec& spec, const PotentialModel& model,
                                 const MicroConfig& sigma0, const Field& h, const RunOptions& options,
                                 RandomStream& rng) {
  model.validate();
  switch (kind) {
    case ProcessKind::Micro: {
      auto process = BlockProcess::micro(spec, model, sigma0, h);
      return run_dynamics(process, options, rng);
    }
    case ProcessKind::Coarse: {
      auto process = BlockProcess::coarse(spec, model, project(spec, sigma0), h.cell_average(spec));
      return run_dynamics(process, options, rng);
    }
    case ProcessKind::Synthetic: {
      SyntheticProcess process(spec, model, sigma0, h.cell_average(spec));
      return run_dynamics(process, options, rng);
    }
  }
  throw std::invalid_argument("run_trajectory: unknown process");
}

}  // namespace cgkmc
