#pragma once

// Saturated slotted-CSMA analysis: outcome probabilities of a contention slot
// and the per-node throughput they imply when every node gets an equal share
// of the successes.

#include <cmath>
#include <cstddef>

#include "fairmac/errors.hpp"

namespace fairmac {

struct MacParams {
  std::size_t n = 1;    // competing nodes
  double tau = 0.001;   // per-slot transmission probability
  double sigma = 0.002; // idle slot length, in packet durations

  void validate() const {
    if (n < 1) throw ConfigError("MAC needs at least one competing node");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
  }
};

struct SlotProbabilities {
  double success = 0.0;
  double idle = 0.0;
  double collision = 0.0;
};

// Outcome of the slot that follows an idle slot when n nodes each transmit
// independently with probability tau.
[[nodiscard]] inline SlotProbabilities slot_probabilities(std::size_t n, double tau) {
  const double nn = static_cast<double>(n);
  SlotProbabilities p;
  p.idle = std::pow(1.0 - tau, nn);
  p.success = nn * std::pow(1.0 - tau, nn - 1.0) * tau;
  p.collision = 1.0 - (p.success + p.idle);
  if (p.collision < 0.25) {
    // 1 - (p_s + p_i) cancels catastrophically when collisions are rare; sum
    // the binomial tail k >= 2 instead.
    double term = p.success;  // P(K = 1)
    double tail = 0.0;
    const double odds = tau / (1.0 - tau);
    for (std::size_t k = 2; k <= n; ++k) {
      term *= static_cast<double>(n - k + 1) / static_cast<double>(k) * odds;
      tail += term;
      if (term < tail * 1e-18) break;
    }
    p.collision = tail;
  }
  return p;
}

[[nodiscard]] inline SlotProbabilities slot_probabilities(const MacParams& mac) {
  mac.validate();
  return slot_probabilities(mac.n, mac.tau);
}

// Expected duration of one contention slot: idle costs sigma, a success or a
// collision costs the packet plus the idle slot that always follows it.
[[nodiscard]] inline double renewal_time(double p_idle, double sigma) {
  return (1.0 - p_idle) * (1.0 + sigma) + p_idle * sigma;
}

[[nodiscard]] inline double renewal_time(const MacParams& mac) {
  return renewal_time(slot_probabilities(mac).idle, mac.sigma);
}

// Upper bound on the min-throughput at target rate d with no MAC degradation.
[[nodiscard]] inline double throughput_bound(double d, std::size_t n, double tau, double sigma) {
  const auto p = slot_probabilities(n, tau);
  return p.success * d / (static_cast<double>(n) * renewal_time(p.idle, sigma));
}

[[nodiscard]] inline double throughput_bound(double d, const MacParams& mac) {
  mac.validate();
  return throughput_bound(d, mac.n, mac.tau, mac.sigma);
}

}  // namespace fairmac
