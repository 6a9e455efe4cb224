#pragma once

// Per-scheme achievable rates, helper sets and physical feasibility of a
// target rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fairmac/errors.hpp"
#include "fairmac/topology.hpp"

namespace fairmac {

// Information carried per unit-duration packet.
class TargetRate {
 public:
  explicit TargetRate(double d) : d_(d) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("target rate must be positive and finite");
  }
  [[nodiscard]] double value() const noexcept { return d_; }
  friend bool operator==(const TargetRate&, const TargetRate&) = default;
  friend auto operator<=>(const TargetRate&, const TargetRate&) = default;

 private:
  double d_;
};

enum class SchemeKind { DirectLink, TwoHop, DecodeForward };

inline constexpr SchemeKind kAllSchemes[] = {SchemeKind::DirectLink, SchemeKind::TwoHop,
                                             SchemeKind::DecodeForward};

[[nodiscard]] constexpr std::string_view to_string(SchemeKind s) noexcept {
  switch (s) {
    case SchemeKind::DirectLink: return "direct";
    case SchemeKind::TwoHop: return "two-hop";
    case SchemeKind::DecodeForward: return "decode-forward";
  }
  return "?";
}

[[nodiscard]] inline SchemeKind parse_scheme(std::string_view name) {
  if (name == "direct" || name == "direct-link" || name == "dl") return SchemeKind::DirectLink;
  if (name == "two-hop" || name == "twohop" || name == "2hop") return SchemeKind::TwoHop;
  if (name == "decode-forward" || name == "df") return SchemeKind::DecodeForward;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

[[nodiscard]] constexpr bool is_cooperative(SchemeKind s) noexcept {
  return s != SchemeKind::DirectLink;
}

// Fraction of a packet a node meeting the target directly needs for its own data.
[[nodiscard]] inline double free_time(double direct_rate, TargetRate d) {
  if (direct_rate < d.value()) throw NotAHelperError("node does not meet the target rate directly");
  return d.value() / direct_rate;
}

// Two-hop rate from k via relay l: min{R_kl, (1 - t_l) R_l}.
[[nodiscard]] inline double rate_two_hop(double r_kl, double r_l, TargetRate d) {
  (void)free_time(r_l, d);
  // (1 - t_l) R_l written as R_l - D, which is exact at the tie points.
  return std::min(r_kl, r_l - d.value());
}

// Decode-and-forward rate: the AP keeps the R_k it overheard during the broadcast.
[[nodiscard]] inline double rate_df(double r_kl, double r_k, double r_l, TargetRate d) {
  (void)free_time(r_l, d);
  return std::min(r_kl, r_k + (r_l - d.value()));
}

// Nodes that can lift k to the target rate under the given scheme. Relays must
// meet the target themselves. Returns an empty set for DirectLink.
[[nodiscard]] inline std::vector<NodeId> helper_set(SchemeKind scheme, NodeId k, const RateTable& rates,
                                                    TargetRate d) {
  std::vector<NodeId> out;
  if (scheme == SchemeKind::DirectLink) return out;
  const double dv = d.value();
  for (NodeId l = 0; l < rates.size(); ++l) {
    if (l == k) continue;
    const double r_l = rates.direct(l);
    if (r_l < dv) continue;
    const double r_kl = rates.pair(k, l);
    const double achieved = scheme == SchemeKind::TwoHop ? rate_two_hop(r_kl, r_l, d)
                                                         : rate_df(r_kl, rates.direct(k), r_l, d);
    if (achieved >= dv) out.push_back(l);
  }
  return out;
}

[[nodiscard]] inline std::vector<NodeId> helper_set_two_hop(NodeId k, const RateTable& rates, TargetRate d) {
  return helper_set(SchemeKind::TwoHop, k, rates, d);
}

[[nodiscard]] inline std::vector<NodeId> helper_set_df(NodeId k, const RateTable& rates, TargetRate d) {
  return helper_set(SchemeKind::DecodeForward, k, rates, d);
}

// Helper sets for every node (index = helped node).
struct HelperSets {
  std::vector<std::vector<NodeId>> two_hop;
  std::vector<std::vector<NodeId>> df;
};

[[nodiscard]] inline HelperSets all_helper_sets(const RateTable& rates, TargetRate d) {
  HelperSets hs;
  hs.two_hop.resize(rates.size());
  hs.df.resize(rates.size());
  for (NodeId k = 0; k < rates.size(); ++k) {
    hs.two_hop[k] = helper_set_two_hop(k, rates, d);
    hs.df[k] = helper_set_df(k, rates, d);
  }
  return hs;
}

enum class Support { DirectSupported, HelperSupported, Unsupported };

[[nodiscard]] constexpr std::string_view to_string(Support s) noexcept {
  switch (s) {
    case Support::DirectSupported: return "direct";
    case Support::HelperSupported: return "helper";
    case Support::Unsupported: return "unsupported";
  }
  return "?";
}

struct FeasibilityReport {
  SchemeKind scheme = SchemeKind::DirectLink;
  double d = 0.0;
  std::vector<Support> support;             // per node
  std::vector<std::vector<NodeId>> helpers;  // per node, helper set under `scheme`
  std::set<NodeId> helper_nodes;             // H: nodes appearing in any helper set
  std::set<NodeId> helped_nodes;             // C: R_k < d with at least one helper

  [[nodiscard]] bool all_supported() const {
    return std::none_of(support.begin(), support.end(),
                        [](Support s) { return s == Support::Unsupported; });
  }
  [[nodiscard]] std::size_t unsupported_count() const {
    return static_cast<std::size_t>(std::count(support.begin(), support.end(), Support::Unsupported));
  }
};

[[nodiscard]] inline FeasibilityReport feasibility(const RateTable& rates, TargetRate d, SchemeKind scheme) {
  FeasibilityReport rep;
  rep.scheme = scheme;
  rep.d = d.value();
  const std::size_t n = rates.size();
  rep.support.resize(n);
  rep.helpers.resize(n);
  for (NodeId k = 0; k < n; ++k) {
    if (rates.direct(k) >= d.value()) {
      rep.support[k] = Support::DirectSupported;
      continue;
    }
    rep.helpers[k] = helper_set(scheme, k, rates, d);
    if (rep.helpers[k].empty()) {
      rep.support[k] = Support::Unsupported;
    } else {
      rep.support[k] = Support::HelperSupported;
      rep.helped_nodes.insert(k);
      rep.helper_nodes.insert(rep.helpers[k].begin(), rep.helpers[k].end());
    }
  }
  return rep;
}

// Largest target every node reaches on its own: min_k R_k.
[[nodiscard]] inline double max_direct_rate(const RateTable& rates) {
  const auto& r = rates.direct_rates();
  return *std::min_element(r.begin(), r.end());
}

// Largest d at which every node is still supported by `scheme`, found by
// bisection on [min_k R_k, max_k R_k]. Support is monotone in d, so the
// bracket is valid. Result is within `tol` of the true boundary, on the
// supported side.
[[nodiscard]] inline double max_supported_rate(const RateTable& rates, SchemeKind scheme,
                                               double tol = 1e-9) {
  double lo = max_direct_rate(rates);
  if (scheme == SchemeKind::DirectLink) return lo;
  const auto& r = rates.direct_rates();
  double hi = *std::max_element(r.begin(), r.end());
  if (feasibility(rates, TargetRate(hi), scheme).all_supported()) return hi;
  while (hi - lo > tol * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    if (feasibility(rates, TargetRate(mid), scheme).all_supported()) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace fairmac
