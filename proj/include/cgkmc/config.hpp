// Experiment configuration: sectioned key = value files with a fixed schema.
//
//   [lattice]   n_sites, coarse_q (comma list), interaction_range
//   [model]     beta, beta_j0, d0, c0 | h, shape (uniform)
//   [run]       t_final, realizations, master_seed, sampling_dt,
//               threshold_c_plus, time_step (paper|exponential),
//               updating (local|global), coarse_process (coarse|synthetic),
//               initial_coverage, initial_pattern (random|island),
//               histogram_bins
//   [outputs]   directory, snapshot_times (comma list)
//   [mean_field] h_min, h_max, h_steps
//
// Unknown sections or keys are rejected. Lines starting with ';' or '#' are
// comments.
#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgkmc/engine.hpp"
#include "cgkmc/lattice.hpp"

namespace cgkmc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InitialPattern { Random, Island };

struct ExperimentConfig {
  // [lattice]
  int n_sites = 1000;
  std::vector<int> coarse_q{1};
  int interaction_range = 100;
  // [model]
  double beta = 1.0;
  double beta_j0 = 6.0;
  double d0 = 1.0;
  std::optional<double> c0;
  double h = 0.0;
  PotentialShape shape = PotentialShape::Uniform;
  // [run]
  double t_final = 100.0;
  int realizations = 1;
  std::uint64_t master_seed = 1;
  double sampling_dt = 1.0;
  double threshold_c_plus = 0.9;
  TimeStepMode time_step = TimeStepMode::Paper;
  UpdateMode updating = UpdateMode::Local;
  ProcessKind coarse_process = ProcessKind::Coarse;
  double initial_coverage = 0.0;
  InitialPattern initial_pattern = InitialPattern::Random;
  int histogram_bins = 100;
  // [outputs]
  std::string directory = "out";
  std::vector<double> snapshot_times;
  // [mean_field]
  double h_min = 0.0;
  double h_max = 6.0;
  int h_steps = 601;

  PotentialModel model() const {
    PotentialModel m;
    m.beta = beta;
    m.j0 = beta_j0 / beta;
    m.d0 = d0;
    m.c0 = c0;
    m.shape = shape;
    return m;
  }
  LatticeSpec lattice(int q) const { return LatticeSpec(n_sites, q, interaction_range); }
  Field field() const { return Field(h); }

  /// Throws ConfigError on the first out-of-range value.
  void validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (n_sites < 1) fail("lattice.n_sites must be >= 1");
    if (coarse_q.empty()) fail("lattice.coarse_q must list at least one value");
    for (int q : coarse_q) {
      if (q < 1 || q > n_sites || n_sites % q != 0)
        fail("lattice.coarse_q value " + std::to_string(q) + " must divide n_sites");
    }
    if (interaction_range < 1 || 2 * interaction_range > n_sites)
      fail("lattice.interaction_range must lie in [1, n_sites/2]");
    if (!(beta > 0.0) || !std::isfinite(beta)) fail("model.beta must be > 0");
    if (!std::isfinite(beta_j0)) fail("model.beta_j0 must be finite");
    if (!(d0 > 0.0) || !std::isfinite(d0)) fail("model.d0 must be > 0");
    if (c0 && (!(*c0 > 0.0) || !std::isfinite(*c0))) fail("model.c0 must be > 0");
    if (!std::isfinite(h)) fail("model.h must be finite");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) fail("run.t_final must be > 0");
    if (realizations < 1) fail("run.realizations must be >= 1");
    if (!(sampling_dt > 0.0) || !std::isfinite(sampling_dt)) fail("run.sampling_dt must be > 0");
    if (!(threshold_c_plus > 0.0 && threshold_c_plus <= 1.0)) fail("run.threshold_c_plus must lie in (0, 1]");
    if (!(initial_coverage >= 0.0 && initial_coverage <= 1.0)) fail("run.initial_coverage must lie in [0, 1]");
    if (histogram_bins < 1) fail("run.histogram_bins must be >= 1");
    if (directory.empty()) fail("outputs.directory must not be empty");
    for (double t : snapshot_times)
      if (!(t >= 0.0)) fail("outputs.snapshot_times must be >= 0");
    if (!(h_max >= h_min) || h_steps < 1) fail("mean_field range is empty");
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("config: cannot parse '" + t + "' for " + key);
  return value;
}

/// Shortest round-trip decimal form, independent of locale.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace config_detail

inline ExperimentConfig parse_config(std::istream& in) {
  using namespace config_detail;
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> schema{
      {"lattice", {"n_sites", "coarse_q", "interaction_range"}},
      {"model", {"beta", "beta_j0", "d0", "c0", "h", "shape"}},
      {"run",
       {"t_final", "realizations", "master_seed", "sampling_dt", "threshold_c_plus", "time_step", "updating",
        "coarse_process", "initial_coverage", "initial_pattern", "histogram_bins"}},
      {"outputs", {"directory", "snapshot_times"}},
      {"mean_field", {"h_min", "h_max", "h_steps"}},
  };
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    const auto known = schema.find(section);
    if (known == schema.end()) throw ConfigError("config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' outside any section");
    for (const auto& [key, node] : body) {
      if (!known->second.count(key)) throw ConfigError("config: unknown key " + section + "." + key);
      const std::string name = section + "." + key;
      const std::string value = trim(node.data());
      if (name == "lattice.n_sites") cfg.n_sites = parse_number<int>(name, value);
      else if (name == "lattice.coarse_q") {
        cfg.coarse_q.clear();
        for (const auto& item : split_list(value)) cfg.coarse_q.push_back(parse_number<int>(name, item));
      } else if (name == "lattice.interaction_range") cfg.interaction_range = parse_number<int>(name, value);
      else if (name == "model.beta") cfg.beta = parse_number<double>(name, value);
      else if (name == "model.beta_j0") cfg.beta_j0 = parse_number<double>(name, value);
      else if (name == "model.d0") cfg.d0 = parse_number<double>(name, value);
      else if (name == "model.c0") cfg.c0 = parse_number<double>(name, value);
      else if (name == "model.h") cfg.h = parse_number<double>(name, value);
      else if (name == "model.shape") {
        if (value != "uniform") throw ConfigError("config: model.shape must be 'uniform'");
      } else if (name == "run.t_final") cfg.t_final = parse_number<double>(name, value);
      else if (name == "run.realizations") cfg.realizations = parse_number<int>(name, value);
      else if (name == "run.master_seed") cfg.master_seed = parse_number<std::uint64_t>(name, value);
      else if (name == "run.sampling_dt") cfg.sampling_dt = parse_number<double>(name, value);
      else if (name == "run.threshold_c_plus") cfg.threshold_c_plus = parse_number<double>(name, value);
      else if (name == "run.time_step") {
        if (value == "paper") cfg.time_step = TimeStepMode::Paper;
        else if (value == "exponential") cfg.time_step = TimeStepMode::Exponential;
        else throw ConfigError("config: run.time_step must be paper or exponential");
      } else if (name == "run.updating") {
        if (value == "local") cfg.updating = UpdateMode::Local;
        else if (value == "global") cfg.updating = UpdateMode::Global;
        else throw ConfigError("config: run.updating must be local or global");
      } else if (name == "run.coarse_process") {
        if (value == "coarse") cfg.coarse_process = ProcessKind::Coarse;
        else if (value == "synthetic") cfg.coarse_process = ProcessKind::Synthetic;
        else throw ConfigError("config: run.coarse_process must be coarse or synthetic");
      } else if (name == "run.initial_coverage") cfg.initial_coverage = parse_number<double>(name, value);
      else if (name == "run.initial_pattern") {
        if (value == "random") cfg.initial_pattern = InitialPattern::Random;
        else if (value == "island") cfg.initial_pattern = InitialPattern::Island;
        else throw ConfigError("config: run.initial_pattern must be random or island");
      } else if (name == "run.histogram_bins") cfg.histogram_bins = parse_number<int>(name, value);
      else if (name == "outputs.directory") cfg.directory = value;
      else if (name == "outputs.snapshot_times") {
        cfg.snapshot_times.clear();
        for (const auto& item : split_list(value)) cfg.snapshot_times.push_back(parse_number<double>(name, item));
      } else if (name == "mean_field.h_min") cfg.h_min = parse_number<double>(name, value);
      else if (name == "mean_field.h_max") cfg.h_max = parse_number<double>(name, value);
      else if (name == "mean_field.h_steps") cfg.h_steps = parse_number<int>(name, value);
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Canonical serialization; parse_config(to_config_text(c)) reproduces c.
inline std::string to_config_text(const ExperimentConfig& c) {
  using config_detail::format_double;
  auto join_int = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s;
  };
  auto join_double = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
  };
  std::ostringstream out;
  out << "[lattice]\n"
      << "n_sites = " << c.n_sites << "\n"
      << "coarse_q = " << join_int(c.coarse_q) << "\n"
      << "interaction_range = " << c.interaction_range << "\n\n"
      << "[model]\n"
      << "beta = " << format_double(c.beta) << "\n"
      << "beta_j0 = " << format_double(c.beta_j0) << "\n"
      << "d0 = " << format_double(c.d0) << "\n";
  if (c.c0) out << "c0 = " << format_double(*c.c0) << "\n";
  out << "h = " << format_double(c.h) << "\n"
      << "shape = uniform\n\n"
      << "[run]\n"
      << "t_final = " << format_double(c.t_final) << "\n"
      << "realizations = " << c.realizations << "\n"
      << "master_seed = " << c.master_seed << "\n"
      << "sampling_dt = " << format_double(c.sampling_dt) << "\n"
      << "threshold_c_plus = " << format_double(c.threshold_c_plus) << "\n"
      << "time_step = " << (c.time_step == TimeStepMode::Paper ? "paper" : "exponential") << "\n"
      << "updating = " << (c.updating == UpdateMode::Local ? "local" : "global") << "\n"
      << "coarse_process = " << (c.coarse_process == ProcessKind::Synthetic ? "synthetic" : "coarse") << "\n"
      << "initial_coverage = " << format_double(c.initial_coverage) << "\n"
      << "initial_pattern = " << (c.initial_pattern == InitialPattern::Island ? "island" : "random") << "\n"
      << "histogram_bins = " << c.histogram_bins << "\n\n"
      << "[outputs]\n"
      << "directory = " << c.directory << "\n";
  if (!c.snapshot_times.empty()) out << "snapshot_times = " << join_double(c.snapshot_times) << "\n";
  out << "\n[mean_field]\n"
      << "h_min = " << format_double(c.h_min) << "\n"
      << "h_max = " << format_double(c.h_max) << "\n"
      << "h_steps = " << c.h_steps << "\n";
  return out.str();
}

}  // namespace cgkmc
