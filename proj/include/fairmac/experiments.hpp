#pragma once

// Experiment runner: Direct-Link baseline, target-rate optimization, regime
// classification and parameter sweeps producing gain records.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "fairmac/analytic.hpp"
#include "fairmac/errors.hpp"
#include "fairmac/rng.hpp"
#include "fairmac/schemes.hpp"
#include "fairmac/simulator.hpp"
#include "fairmac/topology.hpp"

namespace fairmac {

enum class Regime { BoundTracking, MacDegraded, Unsupported };

[[nodiscard]] constexpr std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::BoundTracking: return "bound-tracking";
    case Regime::MacDegraded: return "mac-degraded";
    case Regime::Unsupported: return "unsupported";
  }
  return "?";
}

[[nodiscard]] inline Regime parse_regime(std::string_view s) {
  if (s == "bound-tracking") return Regime::BoundTracking;
  if (s == "mac-degraded") return Regime::MacDegraded;
  if (s == "unsupported") return Regime::Unsupported;
  throw FormatError("unknown regime '" + std::string(s) + "'");
}

inline constexpr double kDefaultRegimeTolerance = 0.05;

[[nodiscard]] inline Regime classify_regime(double measured, double bound, bool physically_supported,
                                            double tol = kDefaultRegimeTolerance) {
  if (!(bound > 0.0)) throw DomainError("regime classification needs a positive bound");
  if (!physically_supported) return Regime::Unsupported;
  return measured >= (1.0 - tol) * bound ? Regime::BoundTracking : Regime::MacDegraded;
}

// Relative min-throughput change in percent. Exactly -100 when nothing is
// delivered to some node; NaN when the baseline itself is zero.
[[nodiscard]] inline double gain_percent(double measured, double baseline) {
  if (!(baseline > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (measured == 0.0) return -100.0;
  return 100.0 * (measured - baseline) / baseline;
}

// Simulation knobs shared by every run of an experiment.
struct RunParams {
  double tau = 0.001;
  double sigma = 0.002;
  std::size_t q_limit = 100;
  StopCondition stop{};
  ContentionMode contention = ContentionMode::EventSkip;

  [[nodiscard]] SimConfig sim_config(SchemeKind scheme, double d, std::uint64_t seed) const {
    SimConfig c;
    c.scheme = scheme;
    c.d = d;
    c.q_limit = q_limit;
    c.tau = tau;
    c.sigma = sigma;
    c.seed = seed;
    c.stop = stop;
    c.contention = contention;
    return c;
  }
};

struct Baseline {
  double d_star = 0.0;
  double min_throughput = 0.0;
  double bound = 0.0;
};

// Direct-Link operated at its own best target rate d* = min_k R_k.
[[nodiscard]] inline Baseline baseline_direct(const RateTable& rates, const RunParams& params, std::uint64_t seed) {
  Baseline b;
  b.d_star = max_direct_rate(rates);
  b.bound = throughput_bound(b.d_star, rates.size(), params.tau, params.sigma);
  if (!(b.d_star > 0.0)) return b;
  b.min_throughput = run(params.sim_config(SchemeKind::DirectLink, b.d_star, seed), rates).min_throughput;
  return b;
}

// Geometric grid from d* up to the largest d every node still reaches under
// `scheme`.
[[nodiscard]] inline std::vector<double> target_rate_grid(const RateTable& rates, SchemeKind scheme,
                                                          std::size_t points = 40) {
  if (points == 0) throw ConfigError("grid needs at least one point");
  const double lo = max_direct_rate(rates);
  if (!(lo > 0.0)) throw ConfigError("some node has zero direct rate");
  const double hi = max_supported_rate(rates, scheme);
  if (points == 1 || hi <= lo) return {lo};
  std::vector<double> grid(points);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

struct OptimizationResult {
  double best_d = 0.0;
  double best_min_throughput = 0.0;
  std::vector<double> grid;
  std::vector<double> min_throughput;  // per grid point
};

// Simulate each grid point with the same seed and keep the argmax; ties go to
// the smaller d.
[[nodiscard]] inline OptimizationResult optimize_target_rate(const RateTable& rates, SchemeKind scheme,
                                                             const RunParams& params,
                                                             const std::vector<double>& grid,
                                                             std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("target-rate grid is empty");
  OptimizationResult res;
  res.grid = grid;
  res.min_throughput.reserve(grid.size());
  res.best_min_throughput = -1.0;
  for (double d : grid) {
    const double m = run(params.sim_config(scheme, d, seed), rates).min_throughput;
    res.min_throughput.push_back(m);
    if (m > res.best_min_throughput || (m == res.best_min_throughput && d < res.best_d)) {
      res.best_min_throughput = m;
      res.best_d = d;
    }
  }
  return res;
}

enum class SweepVariable { TxSnrDb, TargetRate, QLimit, NodeCount };

[[nodiscard]] constexpr std::string_view to_string(SweepVariable v) noexcept {
  switch (v) {
    case SweepVariable::TxSnrDb: return "tx_snr_db";
    case SweepVariable::TargetRate: return "d";
    case SweepVariable::QLimit: return "q_limit";
    case SweepVariable::NodeCount: return "n";
  }
  return "?";
}

[[nodiscard]] inline SweepVariable parse_sweep_variable(std::string_view s) {
  if (s == "tx_snr_db" || s == "tx_snr" || s == "snr") return SweepVariable::TxSnrDb;
  if (s == "d" || s == "target_rate") return SweepVariable::TargetRate;
  if (s == "q_limit" || s == "q") return SweepVariable::QLimit;
  if (s == "n" || s == "nodes") return SweepVariable::NodeCount;
  throw ConfigError("unknown sweep variable '" + std::string(s) + "'");
}

enum class TopologySource { RandomPerReplication, FixedSeed, Explicit };

// Parameters held constant along a sweep.
struct FixedParams {
  std::size_t n = 20;
  double tx_snr_db = 10.0;
  double gamma = 2.0;
  std::optional<double> d;  // unset: optimize d over a grid for every run
  bool d_relative = false;  // d (and d sweep values) are multiples of d*
  RunParams run{};
  std::size_t grid_points = 40;
  double regime_tol = kDefaultRegimeTolerance;
};

struct SweepSpec {
  SweepVariable variable = SweepVariable::TxSnrDb;
  std::vector<double> values;
  FixedParams fixed{};
  std::size_t replications = 1;
  std::vector<SchemeKind> schemes{SchemeKind::TwoHop, SchemeKind::DecodeForward};
  std::uint64_t master_seed = 1;
  TopologySource topology_source = TopologySource::RandomPerReplication;
  std::uint64_t topology_seed = 1;     // FixedSeed
  std::optional<Topology> topology;    // Explicit
  unsigned threads = 1;

  void validate() const {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep values must be sorted ascending");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (schemes.empty()) throw ConfigError("sweep needs at least one scheme");
    if (topology_source == TopologySource::Explicit && !topology) {
      throw ConfigError("explicit topology source without a topology");
    }
    if (variable == SweepVariable::NodeCount && topology_source == TopologySource::Explicit) {
      throw ConfigError("cannot sweep n over an explicit topology");
    }
    if (fixed.grid_points < 1) throw ConfigError("grid_points must be at least 1");
    if (fixed.d && !(*fixed.d > 0.0)) throw ConfigError("fixed d must be positive");
    for (double v : values) {
      switch (variable) {
        case SweepVariable::TargetRate:
          if (!(v > 0.0)) throw ConfigError("swept d values must be positive");
          break;
        case SweepVariable::QLimit:
        case SweepVariable::NodeCount:
          if (v < 1.0 || v != std::floor(v)) throw ConfigError("swept counts must be positive integers");
          break;
        case SweepVariable::TxSnrDb:
          if (!std::isfinite(v)) throw ConfigError("swept SNR must be finite");
          break;
      }
    }
    fixed.run.sim_config(SchemeKind::DirectLink, 1.0, 0).validate();
  }
};

struct GainRecord {
  SweepVariable variable = SweepVariable::TxSnrDb;
  double value = 0.0;
  SchemeKind scheme = SchemeKind::DecodeForward;
  std::size_t replication = 0;
  std::size_t n = 0;
  std::uint64_t topology_seed = 0;
  std::uint64_t sim_seed = 0;
  double tx_snr_db = 0.0;
  std::size_t q_limit = 0;
  double d = 0.0;
  double min_throughput = 0.0;
  double bound = 0.0;
  double baseline_d = 0.0;
  double baseline_min_throughput = 0.0;
  double baseline_bound = 0.0;
  double gain_percent = 0.0;
  Regime regime = Regime::BoundTracking;
  std::size_t unsupported_nodes = 0;
  std::size_t helpers = 0;  // |H|
  std::size_t helped = 0;   // |C|
};

namespace detail {

struct PointSetup {
  std::size_t n;
  double tx_snr_db;
  std::size_t q_limit;
  std::optional<double> d;
};

[[nodiscard]] inline PointSetup point_setup(const SweepSpec& spec, double value) {
  PointSetup p{spec.fixed.n, spec.fixed.tx_snr_db, spec.fixed.run.q_limit, spec.fixed.d};
  switch (spec.variable) {
    case SweepVariable::TxSnrDb: p.tx_snr_db = value; break;
    case SweepVariable::TargetRate: p.d = value; break;
    case SweepVariable::QLimit: p.q_limit = static_cast<std::size_t>(value); break;
    case SweepVariable::NodeCount: p.n = static_cast<std::size_t>(value); break;
  }
  return p;
}

// Runs `fn(i)` for i in [0, count) on up to `threads` workers. The first
// exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Topology used by replication `rep` at a sweep point with `n` nodes.
[[nodiscard]] inline std::pair<Topology, std::uint64_t> sweep_topology(const SweepSpec& spec, std::size_t n,
                                                                       std::size_t rep) {
  switch (spec.topology_source) {
    case TopologySource::Explicit:
      return {*spec.topology, spec.topology->provenance() ? spec.topology->provenance()->seed : 0};
    case TopologySource::FixedSeed:
      return {generate_topology(n, spec.topology_seed), spec.topology_seed};
    case TopologySource::RandomPerReplication: {
      const std::uint64_t seed = derive_seed(spec.master_seed, 0x70701, rep, n);
      return {generate_topology(n, seed), seed};
    }
  }
  throw ConfigError("unknown topology source");
}

// Every sweep value x replication x scheme, in that nesting order.
[[nodiscard]] inline std::vector<GainRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t n_schemes = spec.schemes.size();
  const std::size_t units = spec.values.size() * spec.replications;
  std::vector<GainRecord> out(units * n_schemes);

  detail::parallel_for(units, spec.threads, [&](std::size_t unit) {
    const std::size_t vi = unit / spec.replications;
    const std::size_t rep = unit % spec.replications;
    const double value = spec.values[vi];
    const auto setup = detail::point_setup(spec, value);
    const auto [topology, topo_seed] = sweep_topology(spec, setup.n, rep);
    const ChannelParams channel{db_to_linear(setup.tx_snr_db), spec.fixed.gamma};
    const RateTable rates = build_rate_table(topology, channel);

    RunParams params = spec.fixed.run;
    params.q_limit = setup.q_limit;
    const std::uint64_t sim_seed = derive_seed(spec.master_seed, 0x51a1, rep, vi);
    const Baseline base = baseline_direct(rates, params, sim_seed);

    for (std::size_t si = 0; si < n_schemes; ++si) {
      const SchemeKind scheme = spec.schemes[si];
      GainRecord& r = out[unit * n_schemes + si];
      r.variable = spec.variable;
      r.value = value;
      r.scheme = scheme;
      r.replication = rep;
      r.n = rates.size();
      r.topology_seed = topo_seed;
      r.sim_seed = sim_seed;
      r.tx_snr_db = setup.tx_snr_db;
      r.q_limit = setup.q_limit;
      r.baseline_d = base.d_star;
      r.baseline_min_throughput = base.min_throughput;
      r.baseline_bound = base.bound;

      if (setup.d) {
        r.d = spec.fixed.d_relative ? *setup.d * base.d_star : *setup.d;
        r.min_throughput = run(params.sim_config(scheme, r.d, sim_seed), rates).min_throughput;
      } else {
        const auto grid = target_rate_grid(rates, scheme, spec.fixed.grid_points);
        const auto opt = optimize_target_rate(rates, scheme, params, grid, sim_seed);
        r.d = opt.best_d;
        r.min_throughput = opt.best_min_throughput;
      }
      const auto feas = feasibility(rates, TargetRate(r.d), scheme);
      r.bound = throughput_bound(r.d, rates.size(), params.tau, params.sigma);
      r.regime = classify_regime(r.min_throughput, r.bound, feas.all_supported(), spec.fixed.regime_tol);
      r.gain_percent = gain_percent(r.min_throughput, base.min_throughput);
      r.unsupported_nodes = feas.unsupported_count();
      r.helpers = feas.helper_nodes.size();
      r.helped = feas.helped_nodes.size();
    }
  });
  return out;
}

struct SummaryRow {
  SweepVariable variable = SweepVariable::TxSnrDb;
  double value = 0.0;
  SchemeKind scheme = SchemeKind::DecodeForward;
  std::size_t count = 0;
  double gain_mean = 0.0;
  double gain_se = 0.0;
  double min_throughput_mean = 0.0;
  double min_throughput_se = 0.0;
  double bound_mean = 0.0;
  std::size_t bound_tracking = 0;
  std::size_t mac_degraded = 0;
  std::size_t unsupported = 0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

[[nodiscard]] inline MeanSe mean_and_se(const std::vector<double>& xs) {
  MeanSe r;
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return r;
}

// Mean and standard error across replications for each (value, scheme),
// in first-appearance order.
[[nodiscard]] inline std::vector<SummaryRow> summarize(const std::vector<GainRecord>& records) {
  std::vector<SummaryRow> rows;
  std::map<std::pair<double, int>, std::size_t> index;
  std::vector<std::vector<double>> gains;
  std::vector<std::vector<double>> thr;
  std::vector<double> bounds;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.value, static_cast<int>(r.scheme));
    auto [it, fresh] = index.emplace(key, rows.size());
    if (fresh) {
      SummaryRow s;
      s.variable = r.variable;
      s.value = r.value;
      s.scheme = r.scheme;
      rows.push_back(s);
      gains.emplace_back();
      thr.emplace_back();
      bounds.push_back(0.0);
    }
    const std::size_t i = it->second;
    auto& s = rows[i];
    ++s.count;
    if (!std::isnan(r.gain_percent)) gains[i].push_back(r.gain_percent);
    thr[i].push_back(r.min_throughput);
    bounds[i] += r.bound;
    switch (r.regime) {
      case Regime::BoundTracking: ++s.bound_tracking; break;
      case Regime::MacDegraded: ++s.mac_degraded; break;
      case Regime::Unsupported: ++s.unsupported; break;
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto g = mean_and_se(gains[i]);
    const auto t = mean_and_se(thr[i]);
    rows[i].gain_mean = g.mean;
    rows[i].gain_se = g.se;
    rows[i].min_throughput_mean = t.mean;
    rows[i].min_throughput_se = t.se;
    rows[i].bound_mean = bounds[i] / static_cast<double>(rows[i].count);
  }
  return rows;
}

}  // namespace fairmac
