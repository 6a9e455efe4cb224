#pragma once

// Network geometry, pathloss and link-rate tables.
//
// Distances are dimensionless: a generated topology is scaled so that the
// node farthest from the access point sits at distance one. The access point
// is fixed at the origin and is not a NodeId.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fairmac/errors.hpp"
#include "fairmac/rng.hpp"

namespace fairmac {

using NodeId = std::size_t;

// Inter-node distances below this are clamped before pathloss is applied.
inline constexpr double kMinNodeDistance = 1e-6;

struct Point {
  double x = 0.0;
  double y = 0.0;

  [[nodiscard]] double norm() const noexcept { return std::hypot(x, y); }
  friend bool operator==(const Point&, const Point&) = default;
};

[[nodiscard]] inline double distance(const Point& a, const Point& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct ChannelParams {
  double tx_snr = 1.0;  // linear SNR at unit distance, noise power normalized to 1
  double gamma = 2.0;   // pathloss exponent

  void validate() const {
    if (!(tx_snr > 0.0) || !std::isfinite(tx_snr)) {
      throw ConfigError("tx_snr must be positive and finite");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw ConfigError("pathloss exponent must be non-negative");
    }
  }
};

[[nodiscard]] inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
[[nodiscard]] inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

[[nodiscard]] inline double snr_at(double dist, const ChannelParams& params) {
  if (!(dist > 0.0)) throw GeometryError("distance must be positive");
  return params.tx_snr / std::pow(dist, params.gamma);
}

// Achievable rate in bits/s/Hz for a given linear SNR.
[[nodiscard]] inline double link_rate(double snr) {
  if (!(snr >= 0.0)) throw DomainError("SNR must be non-negative");
  return std::log2(1.0 + snr);
}

// Generation parameters carried along with a topology for reproducibility.
struct TopologyProvenance {
  std::uint64_t seed = 0;
  std::string generator = "uniform-disk";
};

class Topology {
 public:
  Topology() = default;

  explicit Topology(std::vector<Point> positions,
                    std::optional<TopologyProvenance> provenance = std::nullopt)
      : positions_(std::move(positions)), provenance_(std::move(provenance)) {
    if (positions_.empty()) throw ConfigError("topology needs at least one node");
    for (std::size_t k = 0; k < positions_.size(); ++k) {
      const auto& p = positions_[k];
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw GeometryError("node " + std::to_string(k) + " has a non-finite coordinate");
      }
      if (!(p.norm() > 0.0)) {
        throw GeometryError("node " + std::to_string(k) + " coincides with the access point");
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }
  [[nodiscard]] const std::vector<Point>& positions() const noexcept { return positions_; }
  [[nodiscard]] const Point& position(NodeId k) const { return positions_.at(k); }
  [[nodiscard]] static constexpr Point ap_position() noexcept { return {}; }
  [[nodiscard]] const std::optional<TopologyProvenance>& provenance() const noexcept {
    return provenance_;
  }

  [[nodiscard]] double distance_to_ap(NodeId k) const { return positions_.at(k).norm(); }
  [[nodiscard]] double distance_between(NodeId k, NodeId l) const {
    return distance(positions_.at(k), positions_.at(l));
  }

  [[nodiscard]] double max_distance_to_ap() const noexcept {
    double best = 0.0;
    for (const auto& p : positions_) best = std::max(best, p.norm());
    return best;
  }

  // Copy scaled so the farthest node is at distance exactly one.
  [[nodiscard]] Topology normalized() const {
    const double scale = 1.0 / max_distance_to_ap();
    std::vector<Point> scaled;
    scaled.reserve(positions_.size());
    for (const auto& p : positions_) scaled.push_back({p.x * scale, p.y * scale});
    // Pin the farthest node exactly onto the unit circle against rounding.
    const auto far = std::max_element(scaled.begin(), scaled.end(), [](const Point& a, const Point& b) {
      return a.norm() < b.norm();
    });
    const double r = far->norm();
    far->x /= r;
    far->y /= r;
    return Topology(std::move(scaled), provenance_);
  }

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.positions_ == b.positions_;
  }

 private:
  std::vector<Point> positions_;
  std::optional<TopologyProvenance> provenance_;
};

// n points uniform over the unit disk around the AP, normalized afterwards.
[[nodiscard]] inline Topology generate_topology(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("node count must be at least 1");
  Rng rng(seed);
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double radius = std::sqrt(rng.uniform_open_zero());
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    pts.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  return Topology(std::move(pts), TopologyProvenance{seed, "uniform-disk"}).normalized();
}

// Direct rates R_k and pairwise rates R_{k,l}.
class RateTable {
 public:
  RateTable() = default;

  RateTable(std::vector<double> direct, std::vector<double> pair_matrix)
      : direct_(std::move(direct)), pair_(std::move(pair_matrix)) {
    const std::size_t n = direct_.size();
    if (n == 0) throw ConfigError("rate table needs at least one node");
    if (pair_.size() != n * n) throw ConfigError("pair matrix must be n x n");
    for (double r : direct_) {
      if (!(r >= 0.0) || std::isnan(r)) throw ConfigError("rates must be non-negative");
    }
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < n; ++l) {
        if (k == l) continue;
        const double r = pair_[k * n + l];
        if (!(r >= 0.0) || !std::isfinite(r)) {
          throw ConfigError("pair rates must be finite and non-negative");
        }
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return direct_.size(); }
  [[nodiscard]] double direct(NodeId k) const { return direct_.at(k); }
  [[nodiscard]] double pair(NodeId k, NodeId l) const {
    if (k >= size() || l >= size()) throw std::out_of_range("node id out of range");
    return pair_[k * size() + l];
  }
  [[nodiscard]] const std::vector<double>& direct_rates() const noexcept { return direct_; }

  friend bool operator==(const RateTable&, const RateTable&) = default;

 private:
  std::vector<double> direct_;
  std::vector<double> pair_;  // row-major, diagonal unused (0)
};

[[nodiscard]] inline RateTable build_rate_table(const Topology& topology, const ChannelParams& params) {
  params.validate();
  const std::size_t n = topology.size();
  std::vector<double> direct(n);
  std::vector<double> pair(n * n, 0.0);
  for (NodeId k = 0; k < n; ++k) {
    direct[k] = link_rate(snr_at(topology.distance_to_ap(k), params));
    for (NodeId l = k + 1; l < n; ++l) {
      const double d = std::max(topology.distance_between(k, l), kMinNodeDistance);
      const double r = link_rate(snr_at(d, params));
      pair[k * n + l] = r;
      pair[l * n + k] = r;
    }
  }
  return RateTable(std::move(direct), std::move(pair));
}

// Plain-text topology records:
//
//   # fairmac-topology v1
//   # n=<count> seed=<seed> generator=<name>
//   <id> <x> <y>
//   ...
//
// Lines starting with '#' are comments; the provenance line is optional.
inline void write_topology(std::ostream& os, const Topology& topology) {
  os << "# fairmac-topology v1\n";
  os << "# n=" << topology.size();
  if (const auto& prov = topology.provenance()) {
    os << " seed=" << prov->seed << " generator=" << prov->generator;
  }
  os << '\n';
  os << std::setprecision(17);
  for (NodeId k = 0; k < topology.size(); ++k) {
    const auto& p = topology.position(k);
    os << k << ' ' << p.x << ' ' << p.y << '\n';
  }
}

[[nodiscard]] inline Topology read_topology(std::istream& is) {
  std::vector<std::pair<std::size_t, Point>> rows;
  std::optional<TopologyProvenance> prov;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      std::istringstream hs(line.substr(first + 1));
      std::string tok;
      TopologyProvenance p;
      bool has_seed = false;
      while (hs >> tok) {
        if (tok.rfind("seed=", 0) == 0) {
          p.seed = std::stoull(tok.substr(5));
          has_seed = true;
        } else if (tok.rfind("generator=", 0) == 0) {
          p.generator = tok.substr(10);
        }
      }
      if (has_seed) prov = p;
      continue;
    }
    std::istringstream ls(line);
    std::size_t id = 0;
    Point pt;
    if (!(ls >> id >> pt.x >> pt.y)) {
      throw FormatError("topology line " + std::to_string(lineno) + ": expected '<id> <x> <y>'");
    }
    rows.emplace_back(id, pt);
  }
  if (rows.empty()) throw FormatError("topology file has no nodes");
  std::vector<Point> pts(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [id, pt] : rows) {
    if (id >= rows.size() || seen[id]) {
      throw FormatError("node ids must be unique and cover 0..n-1");
    }
    seen[id] = true;
    pts[id] = pt;
  }
  return Topology(std::move(pts), prov);
}

}  // namespace fairmac
