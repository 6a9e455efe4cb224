#pragma once

// CSV output for sweep results.
//
// Record files start with a block of '#' comment lines holding the resolved
// configuration, followed by a header row and one row per GainRecord:
//
//   variable,value,scheme,replication,n,topology_seed,sim_seed,tx_snr_db,
//   q_limit,d,min_throughput,bound,baseline_d,baseline_min_throughput,
//   baseline_bound,gain_percent,regime,unsupported_nodes,helpers,helped

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fairmac/errors.hpp"
#include "fairmac/experiments.hpp"

namespace fairmac {

inline constexpr const char* kRecordColumns =
    "variable,value,scheme,replication,n,topology_seed,sim_seed,tx_snr_db,q_limit,d,min_throughput,bound,"
    "baseline_d,baseline_min_throughput,baseline_bound,gain_percent,regime,unsupported_nodes,helpers,helped";

inline constexpr const char* kSummaryColumns =
    "variable,value,scheme,count,gain_mean,gain_se,min_throughput_mean,min_throughput_se,bound_mean,"
    "bound_tracking,mac_degraded,unsupported";

[[nodiscard]] inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Metadata lines are emitted verbatim after a "# " prefix.
inline void write_metadata(std::ostream& os, const std::vector<std::string>& lines) {
  for (const auto& l : lines) os << "# " << l << '\n';
}

inline void write_records_csv(std::ostream& os, const std::vector<GainRecord>& records,
                              const std::vector<std::string>& metadata = {}) {
  write_metadata(os, metadata);
  os << kRecordColumns << '\n';
  for (const auto& r : records) {
    os << to_string(r.variable) << ',' << fmt_num(r.value) << ',' << to_string(r.scheme) << ','
       << r.replication << ',' << r.n << ',' << r.topology_seed << ',' << r.sim_seed << ','
       << fmt_num(r.tx_snr_db) << ',' << r.q_limit << ',' << fmt_num(r.d) << ',' << fmt_num(r.min_throughput)
       << ',' << fmt_num(r.bound) << ',' << fmt_num(r.baseline_d) << ',' << fmt_num(r.baseline_min_throughput)
       << ',' << fmt_num(r.baseline_bound) << ',' << fmt_num(r.gain_percent) << ',' << to_string(r.regime) << ','
       << r.unsupported_nodes << ',' << r.helpers << ',' << r.helped << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows,
                              const std::vector<std::string>& metadata = {}) {
  write_metadata(os, metadata);
  os << kSummaryColumns << '\n';
  for (const auto& s : rows) {
    os << to_string(s.variable) << ',' << fmt_num(s.value) << ',' << to_string(s.scheme) << ',' << s.count << ','
       << fmt_num(s.gain_mean) << ',' << fmt_num(s.gain_se) << ',' << fmt_num(s.min_throughput_mean) << ','
       << fmt_num(s.min_throughput_se) << ',' << fmt_num(s.bound_mean) << ',' << s.bound_tracking << ','
       << s.mac_degraded << ',' << s.unsupported << '\n';
  }
}

namespace detail {

[[nodiscard]] inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

}  // namespace detail

[[nodiscard]] inline std::vector<GainRecord> read_records_csv(std::istream& is) {
  std::vector<GainRecord> out;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind(kRecordColumns, 0) != 0) throw FormatError("unexpected CSV header");
      header_seen = true;
      continue;
    }
    const auto c = detail::split_csv_line(line);
    if (c.size() != 20) throw FormatError("CSV line " + std::to_string(lineno) + ": expected 20 fields");
    try {
      GainRecord r;
      r.variable = parse_sweep_variable(c[0]);
      r.value = std::stod(c[1]);
      r.scheme = parse_scheme(c[2]);
      r.replication = std::stoul(c[3]);
      r.n = std::stoul(c[4]);
      r.topology_seed = std::stoull(c[5]);
      r.sim_seed = std::stoull(c[6]);
      r.tx_snr_db = std::stod(c[7]);
      r.q_limit = std::stoul(c[8]);
      r.d = std::stod(c[9]);
      r.min_throughput = std::stod(c[10]);
      r.bound = std::stod(c[11]);
      r.baseline_d = std::stod(c[12]);
      r.baseline_min_throughput = std::stod(c[13]);
      r.baseline_bound = std::stod(c[14]);
      r.gain_percent = std::stod(c[15]);
      r.regime = parse_regime(c[16]);
      r.unsupported_nodes = std::stoul(c[17]);
      r.helpers = std::stoul(c[18]);
      r.helped = std::stoul(c[19]);
      out.push_back(r);
    } catch (const std::logic_error& e) {
      throw FormatError("CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header_seen) throw FormatError("CSV has no header row");
  return out;
}

// Wide table for plotting: one row per sweep value, a mean and a standard
// error column per scheme for the chosen metric ("gain_percent" or
// "min_throughput").
inline void write_plot_data(std::ostream& os, const std::vector<GainRecord>& records,
                            const std::string& metric = "gain_percent") {
  if (metric != "gain_percent" && metric != "min_throughput") {
    throw ConfigError("plot metric must be gain_percent or min_throughput");
  }
  const auto rows = summarize(records);
  std::vector<SchemeKind> schemes;
  std::vector<double> values;
  for (const auto& r : rows) {
    if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end()) schemes.push_back(r.scheme);
    if (std::find(values.begin(), values.end(), r.value) == values.end()) values.push_back(r.value);
  }
  std::map<std::pair<double, int>, const SummaryRow*> at;
  for (const auto& r : rows) at[{r.value, static_cast<int>(r.scheme)}] = &r;

  os << (rows.empty() ? std::string("value") : std::string(to_string(rows.front().variable)));
  for (auto s : schemes) os << ',' << to_string(s) << "_mean," << to_string(s) << "_se";
  os << '\n';
  for (double v : values) {
    os << fmt_num(v);
    for (auto s : schemes) {
      const auto it = at.find({v, static_cast<int>(s)});
      if (it == at.end()) {
        os << ",,";
        continue;
      }
      const SummaryRow& r = *it->second;
      if (metric == "gain_percent") {
        os << ',' << fmt_num(r.gain_mean) << ',' << fmt_num(r.gain_se);
      } else {
        os << ',' << fmt_num(r.min_throughput_mean) << ',' << fmt_num(r.min_throughput_se);
      }
    }
    os << '\n';
  }
}

}  // namespace fairmac
