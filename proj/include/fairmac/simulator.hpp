#pragma once

// Slotted discrete-event simulator for Direct-Link CSMA and the cooperative
// fairMACi protocols (Two-Hop and Decode-and-Forward).
//
// Time model: after every idle slot each eligible node transmits with
// probability tau. An idle slot lasts sigma; a success or a collision lasts
// one packet and is always followed by an idle slot, so every busy event
// costs 1 + sigma. ACKs are instantaneous, collision-free and heard by every
// node.
//
// The engine advances busy event by busy event. In ContentionMode::EventSkip
// the run of idle slots before a busy slot is drawn from its geometric law
// and the transmitter set from the binomial law conditioned on being
// non-empty; ContentionMode::PerSlot draws every node's decision in every
// slot. Both realize the same slot process.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <list>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "fairmac/analytic.hpp"
#include "fairmac/errors.hpp"
#include "fairmac/rng.hpp"
#include "fairmac/schemes.hpp"
#include "fairmac/topology.hpp"

namespace fairmac {

enum class ContentionMode { EventSkip, PerSlot };

// Stop after `deliveries` packets have been credited at the AP, or once the
// clock reaches `time`, whichever comes first. Zero disables a criterion.
struct StopCondition {
  std::uint64_t deliveries = 100'000;
  double time = 0.0;
};

struct SimConfig {
  SchemeKind scheme = SchemeKind::DecodeForward;
  double d = 1.0;
  std::size_t q_limit = 100;
  double tau = 0.001;
  double sigma = 0.002;
  std::uint64_t seed = 1;
  StopCondition stop;
  ContentionMode contention = ContentionMode::EventSkip;
  // Keep the full set of delivered packet ids at the AP and check
  // at-most-once delivery against it.
  bool audit = false;

  void validate() const {
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("target rate d must be positive");
    if (q_limit < 1) throw ConfigError("q_limit must be at least 1");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
    if (stop.deliveries == 0 && !(stop.time > 0.0)) {
      throw ConfigError("stop condition needs a positive delivery count or time");
    }
    if (stop.time < 0.0 || std::isnan(stop.time)) throw ConfigError("stop time must be non-negative");
  }

  [[nodiscard]] MacParams mac(std::size_t n) const { return MacParams{n, tau, sigma}; }
};

struct PacketRef {
  NodeId origin = 0;
  std::uint64_t seq = 0;
  double flagged_rate = 0.0;  // origin's R_k as carried in the header

  [[nodiscard]] std::uint64_t key() const noexcept {
    return (static_cast<std::uint64_t>(origin) << 40) | seq;
  }
  friend bool operator==(const PacketRef&, const PacketRef&) = default;
};

struct RelayObligation {
  PacketRef packet;
  double forward_amount = 0.0;  // d for Two-Hop, d - R_k for Decode-and-Forward
};

struct NodeState {
  std::list<RelayObligation> queue;
  std::size_t outstanding = 0;  // own broadcasts awaiting the delivery ACK
  std::uint64_t next_seq = 0;
  double delivered_info = 0.0;
  std::uint64_t delivered_packets = 0;
  std::uint64_t tx_count = 0;
  bool silenced = false;
  double stall_time = 0.0;
};

struct ApState {
  std::unordered_map<std::uint64_t, double> partial_store;  // Decode-and-Forward only
  std::unordered_set<std::uint64_t> delivered;              // audit mode only
};

enum class TxKind { Direct, Broadcast, Relay };

[[nodiscard]] constexpr std::string_view to_string(TxKind k) noexcept {
  switch (k) {
    case TxKind::Direct: return "direct";
    case TxKind::Broadcast: return "broadcast";
    case TxKind::Relay: return "relay";
  }
  return "?";
}

struct IdleSlot {};
struct SuccessSlot {
  NodeId transmitter = 0;
};
struct CollisionSlot {
  std::vector<NodeId> transmitters;
};
using SlotOutcome = std::variant<IdleSlot, SuccessSlot, CollisionSlot>;

// Classify a transmitter set into a slot outcome.
[[nodiscard]] inline SlotOutcome outcome_of(std::vector<NodeId> transmitters) {
  if (transmitters.empty()) return IdleSlot{};
  if (transmitters.size() == 1) return SuccessSlot{transmitters.front()};
  return CollisionSlot{std::move(transmitters)};
}

// One contention slot: every eligible node, in the given order, transmits
// with probability tau.
[[nodiscard]] inline SlotOutcome contend(std::span<const NodeId> eligible, double tau, Rng& rng) {
  std::vector<NodeId> tx;
  for (NodeId k : eligible) {
    if (rng.bernoulli(tau)) tx.push_back(k);
  }
  return outcome_of(std::move(tx));
}

struct BusyEvent {
  double start_time = 0.0;
  SlotOutcome outcome;
  std::optional<TxKind> kind;         // successes only
  std::optional<PacketRef> packet;    // the packet whose fate this event decided
};

struct NodeMetrics {
  double delivered_info = 0.0;
  std::uint64_t delivered_packets = 0;
  std::uint64_t tx_count = 0;
  double stall_time = 0.0;

  friend bool operator==(const NodeMetrics&, const NodeMetrics&) = default;
};

struct MetricsReport {
  SchemeKind scheme = SchemeKind::DirectLink;
  double d = 0.0;
  std::vector<NodeMetrics> nodes;
  double elapsed_time = 0.0;
  std::uint64_t idle_slots = 0;
  std::uint64_t success_events = 0;
  std::uint64_t collision_events = 0;
  std::uint64_t deliveries = 0;
  double min_throughput = 0.0;
  std::size_t peak_obligation_memory = 0;  // max queue length held by any single node
  std::size_t peak_outstanding_packets = 0;  // distinct packets awaiting relay, network-wide
  bool deadlocked = false;  // every node stalled before the stop condition

  [[nodiscard]] std::uint64_t busy_events() const noexcept { return success_events + collision_events; }
  [[nodiscard]] double throughput(NodeId k) const {
    return elapsed_time > 0.0 ? nodes.at(k).delivered_info / elapsed_time : 0.0;
  }

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

class Simulator {
 public:
  using Observer = std::function<void(const Simulator&, const BusyEvent&)>;

  Simulator(SimConfig config, const RateTable& rates) : config_(config), rates_(rates), rng_(config.seed) {
    config_.validate();
    const std::size_t n = rates_.size();
    nodes_.resize(n);
    helpers_.resize(n);
    stalled_since_.assign(n, -1.0);
    const TargetRate d(config_.d);
    for (NodeId k = 0; k < n; ++k) {
      if (rates_.direct(k) >= config_.d) continue;
      if (config_.scheme == SchemeKind::DirectLink) {
        nodes_[k].silenced = true;
      } else {
        for (NodeId l : helper_set(config_.scheme, k, rates_, d)) {
          if (rates_.pair(k, l) >= config_.d) helpers_[k].push_back(l);
        }
      }
    }
    log_idle_per_node_ = std::log1p(-config_.tau);
    refresh_eligibility();
  }

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  void set_observer(Observer obs) { observer_ = std::move(obs); }
  void set_trace(std::ostream* os) { trace_ = os; }

  [[nodiscard]] const SimConfig& config() const noexcept { return config_; }
  [[nodiscard]] const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const ApState& ap() const noexcept { return ap_; }
  [[nodiscard]] const std::vector<NodeId>& relay_candidates(NodeId k) const { return helpers_.at(k); }
  [[nodiscard]] const std::vector<NodeId>& eligible_nodes() const noexcept { return eligible_; }
  [[nodiscard]] double elapsed_time() const noexcept { return elapsed_; }
  [[nodiscard]] std::uint64_t idle_slots() const noexcept { return idle_slots_; }
  [[nodiscard]] std::uint64_t busy_events() const noexcept { return successes_ + collisions_; }
  [[nodiscard]] std::uint64_t deliveries() const noexcept { return deliveries_; }
  [[nodiscard]] bool finished() const noexcept { return finished_; }
  [[nodiscard]] std::size_t pending_packets() const noexcept { return pending_.size(); }
  [[nodiscard]] bool is_pending(std::uint64_t key) const { return pending_.contains(key); }

  // Whether node k may contend in the next slot.
  [[nodiscard]] bool eligible(NodeId k) const {
    const auto& s = nodes_.at(k);
    if (config_.scheme == SchemeKind::DirectLink) return !s.silenced;
    return !s.queue.empty() || s.outstanding < config_.q_limit;
  }

  // Advance through idle slots to the next busy event and process it.
  // Returns false once the stop condition holds.
  bool step() {
    if (finished_) return false;
    if (stop_reached()) {
      finish();
      return false;
    }
    if (eligible_.empty()) {
      // Nobody can ever transmit again; only the clock moves.
      deadlocked_ = true;
      if (config_.stop.time > 0.0) idle_until(config_.stop.time);
      finish();
      return false;
    }

    std::vector<NodeId> tx = config_.contention == ContentionMode::EventSkip ? draw_busy_slot_skip()
                                                                             : draw_busy_slot_per_slot();
    if (config_.stop.time > 0.0 && elapsed_ >= config_.stop.time) {
      finish();
      return false;
    }

    BusyEvent ev;
    ev.start_time = elapsed_;
    ev.outcome = outcome_of(std::move(tx));
    elapsed_ += 1.0 + config_.sigma;

    if (auto* c = std::get_if<CollisionSlot>(&ev.outcome)) {
      ++collisions_;
      for (NodeId k : c->transmitters) ++nodes_[k].tx_count;
    } else {
      ++successes_;
      const NodeId k = std::get<SuccessSlot>(ev.outcome).transmitter;
      ++nodes_[k].tx_count;
      if (config_.scheme == SchemeKind::DirectLink) {
        on_success_direct(k);
        ev.kind = TxKind::Direct;
      } else if (!nodes_[k].queue.empty()) {
        const RelayObligation ob = nodes_[k].queue.front();
        ev.kind = TxKind::Relay;
        ev.packet = ob.packet;
        on_relay_success(k, ob);
      } else {
        auto& s = nodes_[k];
        const PacketRef p{k, s.next_seq++, rates_.direct(k)};
        ev.kind = p.flagged_rate >= config_.d ? TxKind::Direct : TxKind::Broadcast;
        ev.packet = p;
        on_broadcast_success(k, p);
      }
    }

    refresh_eligibility();
    if (trace_ != nullptr) write_trace(*trace_, ev);
    if (observer_) observer_(*this, ev);
    return true;
  }

  MetricsReport run() {
    while (step()) {
    }
    return report();
  }

  // Direct-Link success: the AP decodes and credits d.
  void on_success_direct(NodeId k) {
    if (nodes_.at(k).silenced) throw ConsistencyFault("silenced node transmitted");
    credit(k);
    if (config_.audit) {
      auto& s = nodes_[k];
      audit_delivered(PacketRef{k, s.next_seq++, rates_.direct(k)}.key());
    }
  }

  // Collision-free broadcast of a fresh own packet under fairMACi.
  void on_broadcast_success(NodeId k, const PacketRef& p) {
    if (p.flagged_rate >= config_.d) {
      credit(k);
      if (config_.audit) audit_delivered(p.key());
      return;
    }
    auto& origin = nodes_.at(k);
    if (origin.outstanding >= config_.q_limit) throw ConsistencyFault("broadcast beyond the Q limit");
    ++origin.outstanding;
    if (config_.scheme == SchemeKind::DecodeForward) ap_.partial_store.emplace(p.key(), p.flagged_rate);
    if (helpers_[k].empty()) return;  // broadcast ACK only; never delivered

    const double amount = config_.scheme == SchemeKind::TwoHop ? config_.d : config_.d - p.flagged_rate;
    auto& holders = pending_[p.key()];
    for (NodeId l : helpers_[k]) {
      auto& q = nodes_[l].queue;
      q.push_back(RelayObligation{p, amount});
      holders.emplace_back(l, std::prev(q.end()));
      peak_queue_ = std::max(peak_queue_, q.size());
    }
    peak_pending_ = std::max(peak_pending_, pending_.size());
  }

  // Relay l delivered the joint packet at its queue head.
  void on_relay_success(NodeId l, const RelayObligation& ob) {
    auto& relay = nodes_.at(l);
    if (relay.queue.empty() || !(relay.queue.front().packet == ob.packet)) {
      throw ConsistencyFault("relay success for an obligation not at the queue head");
    }
    const std::uint64_t key = ob.packet.key();
    const auto it = pending_.find(key);
    if (it == pending_.end()) throw ConsistencyFault("packet delivered twice");
    for (auto& [holder, pos] : it->second) {
      if (holder != l) nodes_[holder].queue.erase(pos);
    }
    pending_.erase(it);
    relay.queue.pop_front();

    if (config_.scheme == SchemeKind::DecodeForward && ap_.partial_store.erase(key) == 0) {
      throw ConsistencyFault("decode-and-forward packet missing from the AP store");
    }
    if (config_.audit) audit_delivered(key);

    auto& origin = nodes_.at(ob.packet.origin);
    if (origin.outstanding == 0) throw ConsistencyFault("delivery ACK without an outstanding packet");
    --origin.outstanding;
    credit(ob.packet.origin);
    credit(l);  // the joint packet carries d of the relay's own data
  }

  [[nodiscard]] MetricsReport report() const {
    MetricsReport r;
    r.scheme = config_.scheme;
    r.d = config_.d;
    r.elapsed_time = elapsed_;
    r.idle_slots = idle_slots_;
    r.success_events = successes_;
    r.collision_events = collisions_;
    r.deliveries = deliveries_;
    r.peak_obligation_memory = peak_queue_;
    r.peak_outstanding_packets = peak_pending_;
    r.deadlocked = deadlocked_;
    r.nodes.reserve(nodes_.size());
    for (NodeId k = 0; k < nodes_.size(); ++k) {
      const auto& s = nodes_[k];
      double stall = s.stall_time;
      if (stalled_since_[k] >= 0.0) stall += elapsed_ - stalled_since_[k];
      r.nodes.push_back({s.delivered_info, s.delivered_packets, s.tx_count, stall});
    }
    r.min_throughput = std::numeric_limits<double>::infinity();
    for (NodeId k = 0; k < nodes_.size(); ++k) r.min_throughput = std::min(r.min_throughput, r.throughput(k));
    return r;
  }

  static void write_trace(std::ostream& os, const BusyEvent& ev) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", ev.start_time);
    os << buf;
    if (const auto* c = std::get_if<CollisionSlot>(&ev.outcome)) {
      os << " collision tx=";
      for (std::size_t i = 0; i < c->transmitters.size(); ++i) os << (i ? "," : "") << c->transmitters[i];
      os << " kind=- packet=-\n";
      return;
    }
    os << " success tx=" << std::get<SuccessSlot>(ev.outcome).transmitter << " kind=" << to_string(*ev.kind)
       << " packet=";
    if (ev.packet) {
      os << ev.packet->origin << ':' << ev.packet->seq;
    } else {
      os << '-';
    }
    os << '\n';
  }

 private:
  [[nodiscard]] bool stop_reached() const noexcept {
    if (config_.stop.deliveries > 0 && deliveries_ >= config_.stop.deliveries) return true;
    if (config_.stop.time > 0.0 && elapsed_ >= config_.stop.time) return true;
    return false;
  }

  void credit(NodeId k) {
    nodes_[k].delivered_info += config_.d;
    ++nodes_[k].delivered_packets;
    ++deliveries_;
  }

  void audit_delivered(std::uint64_t key) {
    if (!ap_.delivered.insert(key).second) throw ConsistencyFault("packet delivered twice");
  }

  // Account `count` idle slots, honouring a time stop.
  void add_idle(std::uint64_t count) {
    if (config_.stop.time > 0.0) {
      const double room = config_.stop.time - elapsed_;
      const double cap = std::ceil(room / config_.sigma);
      if (static_cast<double>(count) >= cap) count = cap > 0.0 ? static_cast<std::uint64_t>(cap) : 0;
    }
    idle_slots_ += count;
    elapsed_ += static_cast<double>(count) * config_.sigma;
  }

  void idle_until(double t) {
    if (elapsed_ >= t) return;
    add_idle(static_cast<std::uint64_t>(std::ceil((t - elapsed_) / config_.sigma)));
  }

  std::vector<NodeId> draw_busy_slot_skip() {
    const std::size_t m = eligible_.size();
    const double log_idle = static_cast<double>(m) * log_idle_per_node_;  // log P(idle slot)
    const double u = rng_.uniform_open_zero();
    const double idle = std::floor(std::log(u) / log_idle);
    add_idle(idle >= 9.0e18 ? static_cast<std::uint64_t>(9.0e18) : static_cast<std::uint64_t>(idle));
    if (config_.stop.time > 0.0 && elapsed_ >= config_.stop.time) return {};

    // Transmitter count K ~ Binomial(m, tau) conditioned on K >= 1.
    const double tau = config_.tau;
    const double p_idle = std::exp(log_idle);
    double target = rng_.uniform() * (1.0 - p_idle);
    double pmf = static_cast<double>(m) * tau * std::exp(static_cast<double>(m - 1) * log_idle_per_node_);
    std::size_t count = 1;
    while (count < m && target >= pmf) {
      target -= pmf;
      pmf *= static_cast<double>(m - count) / static_cast<double>(count + 1) * tau / (1.0 - tau);
      ++count;
    }

    scratch_ = eligible_;
    std::vector<NodeId> tx;
    tx.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(m - i));
      std::swap(scratch_[i], scratch_[j]);
      tx.push_back(scratch_[i]);
    }
    std::sort(tx.begin(), tx.end());
    return tx;
  }

  std::vector<NodeId> draw_busy_slot_per_slot() {
    for (;;) {
      if (config_.stop.time > 0.0 && elapsed_ >= config_.stop.time) return {};
      auto out = contend(eligible_, config_.tau, rng_);
      if (auto* s = std::get_if<SuccessSlot>(&out)) return {s->transmitter};
      if (auto* c = std::get_if<CollisionSlot>(&out)) return std::move(c->transmitters);
      add_idle(1);
    }
  }

  void refresh_eligibility() {
    eligible_.clear();
    const bool coop = is_cooperative(config_.scheme);
    for (NodeId k = 0; k < nodes_.size(); ++k) {
      const bool ok = eligible(k);
      if (ok) eligible_.push_back(k);
      if (!coop) continue;
      if (!ok && stalled_since_[k] < 0.0) {
        stalled_since_[k] = elapsed_;
      } else if (ok && stalled_since_[k] >= 0.0) {
        nodes_[k].stall_time += elapsed_ - stalled_since_[k];
        stalled_since_[k] = -1.0;
      }
    }
  }

  void finish() {
    finished_ = true;
    for (NodeId k = 0; k < nodes_.size(); ++k) {
      if (stalled_since_[k] >= 0.0) {
        nodes_[k].stall_time += elapsed_ - stalled_since_[k];
        stalled_since_[k] = elapsed_;
      }
    }
  }

  SimConfig config_;
  const RateTable& rates_;
  Rng rng_;
  std::vector<NodeState> nodes_;
  std::vector<std::vector<NodeId>> helpers_;
  ApState ap_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<NodeId, std::list<RelayObligation>::iterator>>>
      pending_;
  std::vector<NodeId> eligible_;
  std::vector<NodeId> scratch_;
  std::vector<double> stalled_since_;
  double log_idle_per_node_ = 0.0;
  double elapsed_ = 0.0;
  std::uint64_t idle_slots_ = 0;
  std::uint64_t successes_ = 0;
  std::uint64_t collisions_ = 0;
  std::uint64_t deliveries_ = 0;
  std::size_t peak_queue_ = 0;
  std::size_t peak_pending_ = 0;
  bool deadlocked_ = false;
  bool finished_ = false;
  Observer observer_;
  std::ostream* trace_ = nullptr;
};

// Run one simulation to completion.
[[nodiscard]] inline MetricsReport run(const SimConfig& config, const Topology& topology, const RateTable& rates) {
  if (topology.size() != rates.size()) throw ConfigError("topology and rate table disagree on node count");
  Simulator sim(config, rates);
  return sim.run();
}

[[nodiscard]] inline MetricsReport run(const SimConfig& config, const RateTable& rates) {
  Simulator sim(config, rates);
  return sim.run();
}

}  // namespace fairmac
