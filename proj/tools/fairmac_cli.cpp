// Command-line front end: topology generation, analytic bounds, feasibility
// reports, single simulations and parameter sweeps.
//
// Exit codes: 0 success, 2 configuration or input error, 3 runtime fault.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairmac/config.hpp"
#include "fairmac/csv.hpp"
#include "fairmac/fairmac.hpp"

namespace {

using namespace fairmac;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct TopologyArgs {
  std::size_t n = 20;
  std::uint64_t seed = 1;
  std::string in;
};

void add_topology_args(CLI::App* cmd, TopologyArgs& t) {
  cmd->add_option("-n,--nodes", t.n, "Node count for a generated topology")->check(CLI::PositiveNumber);
  cmd->add_option("--topology-seed", t.seed, "Seed for a generated topology");
  cmd->add_option("--topology", t.in, "Read the topology from a record file instead")->check(CLI::ExistingFile);
}

Topology resolve_topology(const TopologyArgs& t) {
  return t.in.empty() ? generate_topology(t.n, t.seed) : load_topology_file(t.in);
}

struct ChannelArgs {
  double tx_snr_db = 0.0;
  double gamma = 2.0;
};

void add_channel_args(CLI::App* cmd, ChannelArgs& c) {
  cmd->add_option("--tx-snr-db", c.tx_snr_db, "Transmit SNR at unit distance, dB");
  cmd->add_option("--gamma", c.gamma, "Pathloss exponent");
}

ChannelParams to_channel(const ChannelArgs& c) { return {db_to_linear(c.tx_snr_db), c.gamma}; }

// Resolves "--d" with "--relative" (multiple of min_k R_k).
double resolve_d(double d, bool relative, const RateTable& rates) {
  return relative ? d * max_direct_rate(rates) : d;
}

std::ostream& output_stream(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty() || path == "-") return std::cout;
  holder = std::make_unique<std::ofstream>(path);
  if (!*holder) throw ConfigError("cannot open output file '" + path + "'");
  return *holder;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative random-access uplink simulator (fairMACi vs. Direct-Link CSMA)"};
  app.require_subcommand(1);

  // topology
  auto* topo_cmd = app.add_subcommand("topology", "Generate or inspect a topology");
  TopologyArgs topo_args;
  ChannelArgs topo_channel;
  std::string topo_out;
  bool topo_rates = false;
  add_topology_args(topo_cmd, topo_args);
  add_channel_args(topo_cmd, topo_channel);
  topo_cmd->add_option("-o,--out", topo_out, "Write the topology record file here (default stdout)");
  topo_cmd->add_flag("--rates", topo_rates, "Print distances and direct rates instead of the record file");

  // bound
  auto* bound_cmd = app.add_subcommand("bound", "Print slot probabilities and the throughput bound");
  MacParams bound_mac{20, 0.001, 0.002};
  double bound_d = 1.0;
  bound_cmd->add_option("-n,--nodes", bound_mac.n, "Competing nodes")->check(CLI::PositiveNumber);
  bound_cmd->add_option("--tau", bound_mac.tau, "Transmission probability per slot");
  bound_cmd->add_option("--sigma", bound_mac.sigma, "Idle slot length (packet durations)");
  bound_cmd->add_option("-d,--target-rate", bound_d, "Target rate");

  // feasibility
  auto* feas_cmd = app.add_subcommand("feasibility", "Helper sets and physical support for a target rate");
  TopologyArgs feas_topo;
  ChannelArgs feas_channel;
  double feas_d = 1.0;
  bool feas_relative = false;
  std::string feas_scheme = "decode-forward";
  add_topology_args(feas_cmd, feas_topo);
  add_channel_args(feas_cmd, feas_channel);
  feas_cmd->add_option("-d,--target-rate", feas_d, "Target rate");
  feas_cmd->add_flag("--relative", feas_relative, "Interpret d as a multiple of min_k R_k");
  feas_cmd->add_option("--scheme", feas_scheme, "direct | two-hop | decode-forward");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Run one simulation and print its metrics");
  TopologyArgs sim_topo;
  ChannelArgs sim_channel;
  SimConfig sim_cfg;
  std::string sim_scheme = "decode-forward";
  std::string sim_trace;
  std::string sim_contention = "event-skip";
  bool sim_relative = false;
  bool sim_json = false;
  add_topology_args(sim_cmd, sim_topo);
  add_channel_args(sim_cmd, sim_channel);
  sim_cmd->add_option("--scheme", sim_scheme, "direct | two-hop | decode-forward");
  sim_cmd->add_option("-d,--target-rate", sim_cfg.d, "Target rate");
  sim_cmd->add_flag("--relative", sim_relative, "Interpret d as a multiple of min_k R_k");
  sim_cmd->add_option("-q,--q-limit", sim_cfg.q_limit, "Maximum outstanding broadcasts per node");
  sim_cmd->add_option("--tau", sim_cfg.tau, "Transmission probability per slot");
  sim_cmd->add_option("--sigma", sim_cfg.sigma, "Idle slot length (packet durations)");
  sim_cmd->add_option("--seed", sim_cfg.seed, "Simulation seed");
  sim_cmd->add_option("--deliveries", sim_cfg.stop.deliveries, "Stop after this many delivered packets (0: off)");
  sim_cmd->add_option("--time", sim_cfg.stop.time, "Stop at this simulated time (0: off)");
  sim_cmd->add_option("--contention", sim_contention, "event-skip | per-slot");
  sim_cmd->add_option("--trace", sim_trace, "Write one line per busy event to this file");
  sim_cmd->add_flag("--json", sim_json, "Print the report as JSON");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep and write gain records as CSV");
  std::string sweep_config;
  std::string sweep_out;
  std::string sweep_summary;
  std::string sw_variable;
  std::vector<double> sw_values;
  std::size_t sw_replications = 0;
  std::vector<std::string> sw_schemes;
  std::uint64_t sw_seed = 0;
  unsigned sw_threads = 0;
  std::size_t sw_n = 0;
  double sw_snr = 0.0;
  double sw_gamma = 0.0;
  double sw_d = 0.0;
  bool sw_relative = false;
  std::size_t sw_q = 0;
  double sw_tau = 0.0;
  double sw_sigma = 0.0;
  std::uint64_t sw_deliveries = 0;
  std::size_t sw_grid = 0;
  std::string sw_topology;
  std::uint64_t sw_topology_seed = 0;
  sweep_cmd->add_option("-c,--config", sweep_config, "JSON sweep specification")->check(CLI::ExistingFile);
  sweep_cmd->add_option("-o,--out", sweep_out, "Per-run record CSV (default stdout)");
  sweep_cmd->add_option("--summary", sweep_summary, "Also write mean/standard-error summary CSV here");
  auto* o_var = sweep_cmd->add_option("--variable", sw_variable, "tx_snr_db | d | q_limit | n");
  auto* o_values = sweep_cmd->add_option("--values", sw_values, "Sweep values, ascending")->delimiter(',');
  auto* o_reps = sweep_cmd->add_option("--replications", sw_replications, "Replications per point");
  auto* o_schemes = sweep_cmd->add_option("--schemes", sw_schemes, "Cooperative schemes to evaluate")->delimiter(',');
  auto* o_seed = sweep_cmd->add_option("--seed", sw_seed, "Master seed");
  auto* o_threads = sweep_cmd->add_option("--threads", sw_threads, "Worker threads");
  auto* o_n = sweep_cmd->add_option("-n,--nodes", sw_n, "Node count");
  auto* o_snr = sweep_cmd->add_option("--tx-snr-db", sw_snr, "Transmit SNR at unit distance, dB");
  auto* o_gamma = sweep_cmd->add_option("--gamma", sw_gamma, "Pathloss exponent");
  auto* o_d = sweep_cmd->add_option("-d,--target-rate", sw_d, "Fixed target rate (default: optimize)");
  auto* o_rel = sweep_cmd->add_flag("--relative", sw_relative, "d values are multiples of min_k R_k");
  auto* o_q = sweep_cmd->add_option("-q,--q-limit", sw_q, "Maximum outstanding broadcasts");
  auto* o_tau = sweep_cmd->add_option("--tau", sw_tau, "Transmission probability per slot");
  auto* o_sigma = sweep_cmd->add_option("--sigma", sw_sigma, "Idle slot length");
  auto* o_deliv = sweep_cmd->add_option("--deliveries", sw_deliveries, "Deliveries per run");
  auto* o_grid = sweep_cmd->add_option("--grid-points", sw_grid, "Target-rate grid size when optimizing");
  auto* o_topo = sweep_cmd->add_option("--topology", sw_topology, "Use this topology record file")->check(CLI::ExistingFile);
  auto* o_topo_seed = sweep_cmd->add_option("--topology-seed", sw_topology_seed, "Use one generated topology");

  // plot-data
  auto* plot_cmd = app.add_subcommand("plot-data", "Reshape a record CSV into one row per sweep value");
  std::string plot_in;
  std::string plot_out;
  std::string plot_metric = "gain_percent";
  plot_cmd->add_option("-i,--in", plot_in, "Record CSV from 'sweep'")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("-o,--out", plot_out, "Output CSV (default stdout)");
  plot_cmd->add_option("--metric", plot_metric, "gain_percent | min_throughput");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    std::unique_ptr<std::ofstream> file;

    if (*topo_cmd) {
      const Topology topo = resolve_topology(topo_args);
      std::ostream& os = output_stream(topo_out, file);
      if (!topo_rates) {
        write_topology(os, topo);
      } else {
        const auto rates = build_rate_table(topo, to_channel(topo_channel));
        os << "id,x,y,distance,direct_rate\n" << std::setprecision(10);
        for (NodeId k = 0; k < topo.size(); ++k) {
          const auto& p = topo.position(k);
          os << k << ',' << p.x << ',' << p.y << ',' << topo.distance_to_ap(k) << ',' << rates.direct(k) << '\n';
        }
      }
      return 0;
    }

    if (*bound_cmd) {
      bound_mac.validate();
      const auto p = slot_probabilities(bound_mac);
      std::cout << std::setprecision(12) << "p_success=" << p.success << "\np_idle=" << p.idle
                << "\np_collision=" << p.collision << "\nrenewal_time=" << renewal_time(bound_mac)
                << "\nthroughput_bound=" << throughput_bound(bound_d, bound_mac) << '\n';
      return 0;
    }

    if (*feas_cmd) {
      const Topology topo = resolve_topology(feas_topo);
      const auto rates = build_rate_table(topo, to_channel(feas_channel));
      const double d = resolve_d(feas_d, feas_relative, rates);
      const auto scheme = parse_scheme(feas_scheme);
      const auto rep = feasibility(rates, TargetRate(d), scheme);
      std::cout << std::setprecision(10) << "# scheme=" << to_string(scheme) << " d=" << d
                << " d_star=" << max_direct_rate(rates) << " max_supported=" << max_supported_rate(rates, scheme)
                << '\n';
      std::cout << "id,direct_rate,support,helpers\n";
      for (NodeId k = 0; k < rates.size(); ++k) {
        std::cout << k << ',' << rates.direct(k) << ',' << to_string(rep.support[k]) << ',';
        for (std::size_t i = 0; i < rep.helpers[k].size(); ++i) std::cout << (i ? " " : "") << rep.helpers[k][i];
        std::cout << '\n';
      }
      std::cout << "# H=" << rep.helper_nodes.size() << " C=" << rep.helped_nodes.size()
                << " unsupported=" << rep.unsupported_count() << '\n';
      return 0;
    }

    if (*sim_cmd) {
      const Topology topo = resolve_topology(sim_topo);
      const auto rates = build_rate_table(topo, to_channel(sim_channel));
      sim_cfg.scheme = parse_scheme(sim_scheme);
      sim_cfg.d = resolve_d(sim_cfg.d, sim_relative, rates);
      sim_cfg.contention = parse_contention(sim_contention);
      Simulator sim(sim_cfg, rates);
      std::unique_ptr<std::ofstream> trace;
      if (!sim_trace.empty()) {
        trace = std::make_unique<std::ofstream>(sim_trace);
        if (!*trace) throw ConfigError("cannot open trace file '" + sim_trace + "'");
        sim.set_trace(trace.get());
      }
      const auto rep = sim.run();
      const double bound = throughput_bound(sim_cfg.d, rates.size(), sim_cfg.tau, sim_cfg.sigma);
      if (sim_json) {
        nlohmann::json j = {{"scheme", to_string(rep.scheme)},
                            {"d", rep.d},
                            {"elapsed_time", rep.elapsed_time},
                            {"idle_slots", rep.idle_slots},
                            {"success_events", rep.success_events},
                            {"collision_events", rep.collision_events},
                            {"deliveries", rep.deliveries},
                            {"min_throughput", rep.min_throughput},
                            {"bound", bound},
                            {"peak_obligation_memory", rep.peak_obligation_memory},
                            {"peak_outstanding_packets", rep.peak_outstanding_packets},
                            {"deadlocked", rep.deadlocked}};
        for (NodeId k = 0; k < rep.nodes.size(); ++k) {
          const auto& m = rep.nodes[k];
          j["nodes"].push_back({{"id", k},
                                {"delivered_info", m.delivered_info},
                                {"delivered_packets", m.delivered_packets},
                                {"tx_count", m.tx_count},
                                {"stall_time", m.stall_time},
                                {"throughput", rep.throughput(k)}});
        }
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << std::setprecision(10) << "scheme=" << to_string(rep.scheme) << "\nd=" << rep.d
                  << "\nelapsed_time=" << rep.elapsed_time << "\nidle_slots=" << rep.idle_slots
                  << "\nsuccess_events=" << rep.success_events << "\ncollision_events=" << rep.collision_events
                  << "\ndeliveries=" << rep.deliveries << "\nmin_throughput=" << rep.min_throughput
                  << "\nbound=" << bound << "\npeak_obligation_memory=" << rep.peak_obligation_memory
                  << "\ndeadlocked=" << (rep.deadlocked ? "true" : "false") << '\n';
        std::cout << "id,delivered_info,tx_count,stall_time,throughput\n";
        for (NodeId k = 0; k < rep.nodes.size(); ++k) {
          const auto& m = rep.nodes[k];
          std::cout << k << ',' << m.delivered_info << ',' << m.tx_count << ',' << m.stall_time << ','
                    << rep.throughput(k) << '\n';
        }
      }
      return 0;
    }

    if (*sweep_cmd) {
      SweepSpec spec;
      if (!sweep_config.empty()) spec = load_sweep_spec(sweep_config);
      if (*o_var) spec.variable = parse_sweep_variable(sw_variable);
      if (*o_values) spec.values = sw_values;
      if (*o_reps) spec.replications = sw_replications;
      if (*o_schemes) {
        spec.schemes.clear();
        for (const auto& s : sw_schemes) spec.schemes.push_back(parse_scheme(s));
      }
      if (*o_seed) spec.master_seed = sw_seed;
      if (*o_threads) spec.threads = sw_threads;
      if (*o_n) spec.fixed.n = sw_n;
      if (*o_snr) spec.fixed.tx_snr_db = sw_snr;
      if (*o_gamma) spec.fixed.gamma = sw_gamma;
      if (*o_d) spec.fixed.d = sw_d;
      if (*o_rel) spec.fixed.d_relative = sw_relative;
      if (*o_q) spec.fixed.run.q_limit = sw_q;
      if (*o_tau) spec.fixed.run.tau = sw_tau;
      if (*o_sigma) spec.fixed.run.sigma = sw_sigma;
      if (*o_deliv) spec.fixed.run.stop.deliveries = sw_deliveries;
      if (*o_grid) spec.fixed.grid_points = sw_grid;
      if (*o_topo) {
        spec.topology_source = TopologySource::Explicit;
        spec.topology = load_topology_file(sw_topology);
      } else if (*o_topo_seed) {
        spec.topology_source = TopologySource::FixedSeed;
        spec.topology_seed = sw_topology_seed;
      }
      spec.validate();

      const auto records = run_sweep(spec);
      const std::vector<std::string> meta = {
          "fairmac sweep",
          "config=" + to_json(spec).dump(),
          "master_seed=" + std::to_string(spec.master_seed),
          "baseline=direct-link at d_star=min_k R_k, simulated with the same seed as each record",
      };
      write_records_csv(output_stream(sweep_out, file), records, meta);
      if (!sweep_summary.empty()) {
        std::ofstream sum(sweep_summary);
        if (!sum) throw ConfigError("cannot open summary file '" + sweep_summary + "'");
        write_summary_csv(sum, summarize(records), meta);
      }
      return 0;
    }

    if (*plot_cmd) {
      std::ifstream in(plot_in);
      if (!in) throw ConfigError("cannot open '" + plot_in + "'");
      const auto records = read_records_csv(in);
      write_plot_data(output_stream(plot_out, file), records, plot_metric);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GeometryError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime fault: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
