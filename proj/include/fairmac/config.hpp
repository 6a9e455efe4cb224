#pragma once

// JSON representation of sweep specifications.
//
//   {
//     "variable": "tx_snr_db",            // tx_snr_db | d | q_limit | n
//     "values": [0, 5, 10],
//     "replications": 20,
//     "schemes": ["two-hop", "decode-forward"],
//     "master_seed": 1,
//     "threads": 1,
//     "topology": {"source": "random"},    // random | seed (+ "seed") | file (+ "path")
//     "fixed": {
//       "n": 20, "tx_snr_db": 10, "gamma": 2,
//       "d": 1.5, "d_relative": false,     // omit "d" to optimize it per run
//       "q_limit": 100, "tau": 0.001, "sigma": 0.002,
//       "stop_deliveries": 100000, "stop_time": 0,
//       "grid_points": 40, "regime_tol": 0.05,
//       "contention": "event-skip"         // event-skip | per-slot
//     }
//   }
//
// Every key is optional except "values".

#include <fstream>
#include <string>

#include <json.hpp>

#include "fairmac/errors.hpp"
#include "fairmac/experiments.hpp"
#include "fairmac/topology.hpp"

namespace fairmac {

[[nodiscard]] inline std::string_view to_string(ContentionMode m) noexcept {
  return m == ContentionMode::EventSkip ? "event-skip" : "per-slot";
}

[[nodiscard]] inline ContentionMode parse_contention(std::string_view s) {
  if (s == "event-skip") return ContentionMode::EventSkip;
  if (s == "per-slot") return ContentionMode::PerSlot;
  throw ConfigError("unknown contention mode '" + std::string(s) + "'");
}

[[nodiscard]] inline Topology load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topology file '" + path + "'");
  return read_topology(in);
}

inline void apply_fixed_json(const nlohmann::json& j, FixedParams& f) {
  f.n = j.value("n", f.n);
  f.tx_snr_db = j.value("tx_snr_db", f.tx_snr_db);
  f.gamma = j.value("gamma", f.gamma);
  if (j.contains("d")) {
    if (j["d"].is_null()) {
      f.d.reset();
    } else {
      f.d = j["d"].get<double>();
    }
  }
  f.d_relative = j.value("d_relative", f.d_relative);
  f.run.q_limit = j.value("q_limit", f.run.q_limit);
  f.run.tau = j.value("tau", f.run.tau);
  f.run.sigma = j.value("sigma", f.run.sigma);
  f.run.stop.deliveries = j.value("stop_deliveries", f.run.stop.deliveries);
  f.run.stop.time = j.value("stop_time", f.run.stop.time);
  if (j.contains("contention")) f.run.contention = parse_contention(j["contention"].get<std::string>());
  f.grid_points = j.value("grid_points", f.grid_points);
  f.regime_tol = j.value("regime_tol", f.regime_tol);
}

[[nodiscard]] inline SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  SweepSpec s;
  try {
    if (j.contains("variable")) s.variable = parse_sweep_variable(j["variable"].get<std::string>());
    s.values = j.at("values").get<std::vector<double>>();
    s.replications = j.value("replications", s.replications);
    if (j.contains("schemes")) {
      s.schemes.clear();
      for (const auto& name : j["schemes"]) s.schemes.push_back(parse_scheme(name.get<std::string>()));
    }
    s.master_seed = j.value("master_seed", s.master_seed);
    s.threads = j.value("threads", s.threads);
    if (j.contains("topology")) {
      const auto& t = j["topology"];
      const std::string source = t.value("source", std::string("random"));
      if (source == "random") {
        s.topology_source = TopologySource::RandomPerReplication;
      } else if (source == "seed") {
        s.topology_source = TopologySource::FixedSeed;
        s.topology_seed = t.value("seed", s.topology_seed);
      } else if (source == "file") {
        s.topology_source = TopologySource::Explicit;
        s.topology = load_topology_file(t.at("path").get<std::string>());
      } else {
        throw ConfigError("unknown topology source '" + source + "'");
      }
    }
    if (j.contains("fixed")) apply_fixed_json(j["fixed"], s.fixed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad sweep config: ") + e.what());
  }
  return s;
}

[[nodiscard]] inline nlohmann::json to_json(const SweepSpec& s) {
  nlohmann::json fixed = {
      {"n", s.fixed.n},
      {"tx_snr_db", s.fixed.tx_snr_db},
      {"gamma", s.fixed.gamma},
      {"d", s.fixed.d ? nlohmann::json(*s.fixed.d) : nlohmann::json(nullptr)},
      {"d_relative", s.fixed.d_relative},
      {"q_limit", s.fixed.run.q_limit},
      {"tau", s.fixed.run.tau},
      {"sigma", s.fixed.run.sigma},
      {"stop_deliveries", s.fixed.run.stop.deliveries},
      {"stop_time", s.fixed.run.stop.time},
      {"grid_points", s.fixed.grid_points},
      {"regime_tol", s.fixed.regime_tol},
      {"contention", std::string(to_string(s.fixed.run.contention))},
  };
  nlohmann::json schemes = nlohmann::json::array();
  for (auto k : s.schemes) schemes.push_back(std::string(to_string(k)));
  nlohmann::json topo;
  switch (s.topology_source) {
    case TopologySource::RandomPerReplication: topo = {{"source", "random"}}; break;
    case TopologySource::FixedSeed: topo = {{"source", "seed"}, {"seed", s.topology_seed}}; break;
    case TopologySource::Explicit: topo = {{"source", "file"}, {"nodes", s.topology->size()}}; break;
  }
  return {
      {"variable", std::string(to_string(s.variable))},
      {"values", s.values},
      {"replications", s.replications},
      {"schemes", schemes},
      {"master_seed", s.master_seed},
      {"topology", topo},
      {"fixed", fixed},
  };
}

[[nodiscard]] inline SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return sweep_spec_from_json(j);
}

}  // namespace fairmac
