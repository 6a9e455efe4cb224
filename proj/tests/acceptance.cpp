// Acceptance checks AC1..AC7. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fairmac/experiments.hpp"
#include "fairmac/fairmac.hpp"

using namespace fairmac;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_err(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

// AC1 ---------------------------------------------------------------------

using quad = __float128;

quad qpow(quad x, std::size_t k) {
  quad r = 1;
  for (std::size_t i = 0; i < k; ++i) r *= x;
  return r;
}

Outcome ac1() {
  Outcome o;
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t n = 1; n <= 64; ++n) {
    for (int ti = 0; ti <= 12; ++ti) {
      const double tau = 1e-4 * std::pow(1e3, ti / 12.0);
      const quad qt = tau;
      const quad ps = quad(n) * qt * qpow(1 - qt, n - 1);
      const quad pi = qpow(1 - qt, n);
      const quad pc = 1 - ps - pi;
      const auto p = slot_probabilities(n, tau);
      worst = std::max({worst, rel_err(p.success, double(ps)), rel_err(p.idle, double(pi)),
                        rel_err(p.collision, double(pc))});
      for (int si = 0; si <= 8; ++si) {
        const double sigma = 1e-3 * std::pow(1e2, si / 8.0);
        for (double d : {0.37, 1.0, 4.2}) {
          const quad s = ps * quad(d) / (quad(n) * ((1 - pi) * (1 + quad(sigma)) + pi * quad(sigma)));
          worst = std::max(worst, rel_err(throughput_bound(d, n, tau, sigma), double(s)));
          ++cases;
        }
      }
    }
  }
  o.require(worst <= 1e-12, fmt("max relative error %.3g", worst));
  o.detail = fmt("%zu bound cases, max relative error %.3g", cases, worst) + (o.pass ? "" : " > 1e-12");
  return o;
}

// AC2 ---------------------------------------------------------------------

bool within_3se(std::uint64_t count, std::uint64_t total, double prob, double& z) {
  const double se = std::sqrt(prob * (1 - prob) / static_cast<double>(total));
  z = (static_cast<double>(count) / static_cast<double>(total) - prob) / se;
  return std::abs(z) <= 3.0;
}

Outcome ac2() {
  Outcome o;
  const std::size_t n = 20;
  const double tau = 0.001;
  const auto p = slot_probabilities(n, tau);

  // Per-slot Bernoulli contention.
  const std::uint64_t slots = 1'000'000;
  std::vector<NodeId> nodes(n);
  for (NodeId k = 0; k < n; ++k) nodes[k] = k;
  Rng rng(derive_seed(2, 0xac2, 0, 0));
  std::uint64_t s = 0, i = 0, c = 0;
  for (std::uint64_t t = 0; t < slots; ++t) {
    const auto out = contend(nodes, tau, rng);
    if (std::holds_alternative<IdleSlot>(out)) ++i;
    else if (std::holds_alternative<SuccessSlot>(out)) ++s;
    else ++c;
  }
  double zs, zi, zc;
  o.require(within_3se(s, slots, p.success, zs), "per-slot success");
  o.require(within_3se(i, slots, p.idle, zi), "per-slot idle");
  o.require(within_3se(c, slots, p.collision, zc), "per-slot collision");

  // Simulator clock with idle-run skipping, everyone always eligible.
  const RateTable rates(std::vector<double>(n, 10.0), std::vector<double>(n * n, 10.0));
  SimConfig cfg;
  cfg.scheme = SchemeKind::DirectLink;
  cfg.d = 1.0;
  cfg.tau = tau;
  cfg.seed = derive_seed(2, 0xac2, 1, 0);
  cfg.stop.deliveries = 0;
  cfg.stop.time = 23000.0;
  const auto r = run(cfg, rates);
  const std::uint64_t total = r.idle_slots + r.busy_events();
  double ys, yi, yc;
  o.require(total >= slots, "simulated run shorter than 10^6 slots");
  o.require(within_3se(r.success_events, total, p.success, ys), "simulator success");
  o.require(within_3se(r.idle_slots, total, p.idle, yi), "simulator idle");
  o.require(within_3se(r.collision_events, total, p.collision, yc), "simulator collision");
  const std::string z = fmt("z(s,i,c): contend %.2f %.2f %.2f; simulator %.2f %.2f %.2f over %llu slots", zs, zi, zc,
                            ys, yi, yc, static_cast<unsigned long long>(total));
  o.detail = o.pass ? z : o.detail + "; " + z;
  return o;
}

// AC3 ---------------------------------------------------------------------

Outcome ac3() {
  Outcome o;
  double worst = 0.0;
  std::uint64_t fewest = ~0ULL;
  for (std::size_t n : {5u, 10u, 20u}) {
    const auto rates = build_rate_table(generate_topology(n, 300 + n), {1.0, 2.0});
    for (double rel : {0.8, 1.0}) {
      const double d = rel * max_direct_rate(rates);
      SimConfig c;
      c.scheme = SchemeKind::DirectLink;
      c.d = d;
      c.seed = derive_seed(3, n, static_cast<std::uint64_t>(rel * 10), 0);
      c.stop.deliveries = 200'000 * n;
      const auto r = run(c, rates);
      const double bound = throughput_bound(d, n, c.tau, c.sigma);
      fewest = std::min(fewest, r.deliveries);
      for (NodeId k = 0; k < n; ++k) {
        const double e = rel_err(r.throughput(k), bound);
        worst = std::max(worst, e);
        o.require(e <= 0.02, fmt("n=%zu d=%.3f node %zu off by %.2f%%", n, d, k, 100 * e));
      }
    }
  }
  o.require(fewest >= 100'000, "fewer than 10^5 deliveries");
  if (o.pass) o.detail = fmt("max per-node deviation from bound %.3f%% (>= %llu deliveries per run)", 100 * worst,
                             static_cast<unsigned long long>(fewest));
  return o;
}

// AC4 ---------------------------------------------------------------------

Outcome ac4() {
  Outcome o;
  // Helper-rich: four helpers serve two helped nodes.
  const std::size_t n = 8;
  const auto rates = build_rate_table(generate_topology(n, 6), {1.0, 2.0});
  const double d = 1.2 * max_direct_rate(rates);
  const auto fr = feasibility(rates, TargetRate(d), SchemeKind::DecodeForward);
  o.require(fr.all_supported() && fr.helper_nodes.size() >= fr.helped_nodes.size() && !fr.helped_nodes.empty(),
            "topology is not helper-rich");
  const double bound = throughput_bound(d, n, 0.001, 0.002);
  const std::vector<std::size_t> qs{1, 2, 3, 4, 6, 8, 12, 17, 25, 40, 70, 100};
  const std::size_t reps = 5;

  RunParams params;
  params.stop.deliveries = 100'000 * n;
  std::vector<double> base(reps);
  for (std::size_t r = 0; r < reps; ++r) base[r] = baseline_direct(rates, params, derive_seed(4, r, 0, 0)).min_throughput;

  std::vector<MeanSe> gain, ratio;
  for (std::size_t q : qs) {
    params.q_limit = q;
    std::vector<double> g, b;
    for (std::size_t r = 0; r < reps; ++r) {
      const double m = run(params.sim_config(SchemeKind::DecodeForward, d, derive_seed(4, r, 0, 0)), rates).min_throughput;
      g.push_back(gain_percent(m, base[r]));
      b.push_back(m / bound);
    }
    gain.push_back(mean_and_se(g));
    ratio.push_back(mean_and_se(b));
  }
  for (std::size_t i = 1; i < qs.size(); ++i) {
    const double slack = 2.0 * std::hypot(gain[i].se, gain[i - 1].se);
    o.require(gain[i].mean >= gain[i - 1].mean - slack,
              fmt("gain drops from Q=%zu (%.2f%%) to Q=%zu (%.2f%%)", qs[i - 1], gain[i - 1].mean, qs[i], gain[i].mean));
  }
  std::size_t q_star = 0;
  for (std::size_t i = 0; i < qs.size() && q_star == 0; ++i) {
    if (ratio[i].mean >= 0.99) q_star = qs[i];
  }
  o.require(q_star != 0, fmt("best throughput/bound %.4f < 0.99", ratio.back().mean));
  if (o.pass) {
    o.detail = fmt("Q=1 at %.3f of bound (gain %.1f%%), within 1%% of bound from Q=%zu, Q=100 at %.4f (gain %.1f%%)",
                   ratio.front().mean, gain.front().mean, q_star, ratio.back().mean, gain.back().mean);
  }
  return o;
}

// AC5 ---------------------------------------------------------------------

Outcome ac5() {
  Outcome o;
  const std::size_t n = 20;
  const auto rates = build_rate_table(generate_topology(n, 7), {1.0, 2.0});
  const double lo = max_direct_rate(rates);
  const double hi = max_supported_rate(rates, SchemeKind::DecodeForward);
  RunParams params;
  params.stop.deliveries = 1'000'000;
  const std::uint64_t seed = derive_seed(5, 0, 0, 0);
  const auto base = baseline_direct(rates, params, seed);

  const int points = 24;
  std::string seq;
  std::vector<Regime> regimes;
  double last_gain = 0.0;
  for (int i = 0; i < points; ++i) {
    const double d = lo * std::pow(1.2 * hi / lo, i / static_cast<double>(points - 1));
    const double m = run(params.sim_config(SchemeKind::DecodeForward, d, seed), rates).min_throughput;
    const bool supported = feasibility(rates, TargetRate(d), SchemeKind::DecodeForward).all_supported();
    const Regime reg = classify_regime(m, throughput_bound(d, n, params.tau, params.sigma), supported);
    const double g = gain_percent(m, base.min_throughput);
    if (reg == Regime::Unsupported) o.require(g == -100.0, fmt("unsupported point d=%.3f has gain %.2f%%", d, g));
    regimes.push_back(reg);
    seq += "BMU"[static_cast<int>(reg)];
    last_gain = g;
  }
  o.require(std::is_sorted(regimes.begin(), regimes.end()), "regimes out of order: " + seq);
  for (Regime r : {Regime::BoundTracking, Regime::MacDegraded, Regime::Unsupported}) {
    o.require(std::find(regimes.begin(), regimes.end(), r) != regimes.end(), "missing regime " + std::string(to_string(r)) + ": " + seq);
  }
  o.require(last_gain == -100.0, "final gain is not -100%");
  if (o.pass) o.detail = "regimes over increasing d (B/M/U): " + seq;
  return o;
}

// AC6 ---------------------------------------------------------------------

Outcome ac6() {
  Outcome o;
  const std::vector<double> snrs{-10.0, -5.0, 0.0};
  std::map<std::pair<std::size_t, SchemeKind>, double> peak;
  std::string summary;
  for (std::size_t n : {5u, 10u, 20u, 40u}) {
    SweepSpec spec;
    spec.variable = SweepVariable::TxSnrDb;
    spec.values = snrs;
    spec.replications = 20;
    spec.fixed.n = n;
    spec.fixed.run.stop.deliveries = 100'000;
    spec.master_seed = 600 + n;
    const auto rows = summarize(run_sweep(spec));
    std::map<std::pair<double, SchemeKind>, double> mean;
    for (const auto& row : rows) mean[{row.value, row.scheme}] = row.gain_mean;
    for (double v : snrs) {
      const double th = mean.at({v, SchemeKind::TwoHop});
      const double df = mean.at({v, SchemeKind::DecodeForward});
      o.require(df >= th, fmt("n=%zu snr=%g: DF %.2f%% < Two-Hop %.2f%%", n, v, df, th));
      o.require(th >= 0.0, fmt("n=%zu snr=%g: Two-Hop gain %.2f%% < 0", n, v, th));
      for (auto s : {SchemeKind::TwoHop, SchemeKind::DecodeForward}) {
        auto& p = peak[{n, s}];
        p = std::max(p, mean.at({v, s}));
      }
    }
    summary += fmt(" n=%zu: 2hop %.1f%% df %.1f%%;", n, peak[{n, SchemeKind::TwoHop}], peak[{n, SchemeKind::DecodeForward}]);
  }
  for (auto s : {SchemeKind::TwoHop, SchemeKind::DecodeForward}) {
    o.require(peak[{5, s}] < peak[{10, s}] && peak[{10, s}] < peak[{20, s}] && peak[{20, s}] < peak[{40, s}],
              "peak gain not increasing in n for " + std::string(to_string(s)));
  }
  o.require(peak[{40, SchemeKind::DecodeForward}] > 30.0, "n=40 DF peak gain <= 30%");
  o.require(peak[{40, SchemeKind::TwoHop}] > 15.0, "n=40 Two-Hop peak gain <= 15%");
  o.detail = (o.pass ? std::string("peak mean gains:") : o.detail + "; peaks:") + summary;
  return o;
}

// AC7 ---------------------------------------------------------------------

// Helper sets straight from the rate expressions.
std::vector<NodeId> brute_force_helpers(SchemeKind scheme, NodeId k, const RateTable& r, double d) {
  std::vector<NodeId> out;
  for (NodeId l = 0; l < r.size(); ++l) {
    if (l == k || r.direct(l) < d) continue;
    const double rate = scheme == SchemeKind::TwoHop ? std::min(r.pair(k, l), r.direct(l) - d)
                                                     : std::min(r.pair(k, l), r.direct(k) + r.direct(l) - d);
    if (rate >= d) out.push_back(l);
  }
  return out;
}

std::vector<NodeId> closed_form_helpers(SchemeKind scheme, NodeId k, const RateTable& r, double d) {
  std::vector<NodeId> out;
  for (NodeId l = 0; l < r.size(); ++l) {
    if (l == k || r.pair(k, l) < d) continue;
    const bool ok = scheme == SchemeKind::TwoHop ? r.direct(l) >= 2 * d
                                                 : r.direct(l) >= d && r.direct(k) + r.direct(l) >= 2 * d;
    if (ok) out.push_back(l);
  }
  return out;
}

void helper_properties(Outcome& o) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rates = build_rate_table(generate_topology(15, 700 + seed), {db_to_linear(-5.0 + 0.1 * seed), 2.0});
    const double lo = max_direct_rate(rates);
    for (double m : {0.8, 1.0, 1.3, 1.7, 2.5}) {
      const double d = m * lo;
      for (NodeId k = 0; k < rates.size(); ++k) {
        const auto h2 = helper_set(SchemeKind::TwoHop, k, rates, TargetRate(d));
        const auto hdf = helper_set(SchemeKind::DecodeForward, k, rates, TargetRate(d));
        o.require(std::includes(hdf.begin(), hdf.end(), h2.begin(), h2.end()),
                  fmt("seed %llu: two-hop helpers not within df helpers", static_cast<unsigned long long>(seed)));
        for (auto s : {SchemeKind::TwoHop, SchemeKind::DecodeForward}) {
          const auto& lib = s == SchemeKind::TwoHop ? h2 : hdf;
          o.require(lib == brute_force_helpers(s, k, rates, d) && lib == closed_form_helpers(s, k, rates, d),
                    fmt("seed %llu: helper set mismatch", static_cast<unsigned long long>(seed)));
        }
      }
    }
  }
}

void protocol_invariants(Outcome& o, SchemeKind scheme, std::uint64_t seed) {
  const auto rates = build_rate_table(generate_topology(16, 800 + seed), {1.0, 2.0});
  const double lo = max_direct_rate(rates);
  SimConfig c;
  c.scheme = scheme;
  c.d = scheme == SchemeKind::DirectLink ? 1.3 * lo : std::sqrt(lo * max_supported_rate(rates, scheme));
  c.q_limit = 4;
  c.tau = 0.01;
  c.seed = seed;
  c.audit = true;
  c.stop.deliveries = 0;
  c.stop.time = 4000.0;
  Simulator sim(c, rates);
  std::uint64_t relays = 0;
  bool stale = false, over_q = false;
  sim.set_observer([&](const Simulator& s, const BusyEvent& ev) {
    if (ev.kind == TxKind::Relay) ++relays;
    for (const auto& st : s.nodes()) {
      over_q = over_q || st.outstanding > c.q_limit;
      for (const auto& ob : st.queue) {
        stale = stale || !s.is_pending(ob.packet.key()) || s.ap().delivered.contains(ob.packet.key());
      }
    }
  });
  std::ostringstream trace;
  sim.set_trace(&trace);
  MetricsReport r;
  try {
    r = sim.run();
  } catch (const ConsistencyFault& e) {
    o.require(false, std::string("consistency fault: ") + e.what());
    return;
  }
  const std::string tag = std::string(to_string(scheme)) + fmt(" seed %llu", static_cast<unsigned long long>(seed));
  o.require(r.idle_slots + r.busy_events() >= 10'000, tag + ": run shorter than 10^4 slots");
  o.require(!stale, tag + ": stale obligation");
  o.require(!over_q, tag + ": outstanding above Q");
  o.require(sim.ap().delivered.size() + relays == r.deliveries, tag + ": delivery count mismatch");
  o.require(r.peak_obligation_memory <= c.q_limit * rates.size(), tag + ": obligation memory above Q*N");
  const double clock = c.sigma * static_cast<double>(r.idle_slots) + (1 + c.sigma) * static_cast<double>(r.busy_events());
  o.require(std::abs(r.elapsed_time - clock) <= 1e-9 * clock, tag + ": elapsed-time identity");
  const std::string lines = trace.str();
  o.require(static_cast<std::size_t>(std::count(lines.begin(), lines.end(), '\n')) == r.busy_events(),
            tag + ": trace length");

  // Fixed seed: identical report and trace.
  Simulator again(c, rates);
  std::ostringstream trace2;
  again.set_trace(&trace2);
  o.require(again.run() == r && trace2.str() == lines, tag + ": rerun differs");
}

void tx_parity(Outcome& o, SchemeKind scheme, const RateTable& rates, double d, std::uint64_t seed) {
  SimConfig c;
  c.scheme = scheme;
  c.d = d;
  c.seed = seed;
  c.stop.deliveries = 50'000 * rates.size();
  const auto r = run(c, rates);
  const double slots = static_cast<double>(r.idle_slots + r.busy_events());
  const double mean = slots * c.tau;
  const double se = std::sqrt(slots * c.tau * (1 - c.tau));
  for (NodeId k = 0; k < rates.size(); ++k) {
    const double z = (static_cast<double>(r.nodes[k].tx_count) - mean) / se;
    o.require(std::abs(z) <= 3.0, std::string(to_string(scheme)) + fmt(": node %zu tx_count z=%.2f", k, z));
  }
}

Outcome ac7() {
  Outcome o;
  helper_properties(o);
  for (auto scheme : kAllSchemes) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) protocol_invariants(o, scheme, seed);
  }
  const auto direct = build_rate_table(generate_topology(10, 710), {1.0, 2.0});
  tx_parity(o, SchemeKind::DirectLink, direct, max_direct_rate(direct), 71);
  const auto rich = build_rate_table(generate_topology(8, 6), {1.0, 2.0});
  tx_parity(o, SchemeKind::DecodeForward, rich, 1.2 * max_direct_rate(rich), 72);
  if (o.pass) {
    o.detail = "helper sets (100 seeds x 5 d), delivery/obligation/clock invariants and reruns (15 runs), tx parity";
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 analytic exactness", ac1},        {"AC2 contention agreement", ac2},
      {"AC3 direct-link bound", ac3},         {"AC4 queue-limit degradation", ac4},
      {"AC5 target-rate regimes", ac5},       {"AC6 scheme ordering", ac6},
      {"AC7 property suite", ac7},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
