#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fairmac {

// SplitMix64 finalizer. Used to derive independent child seeds from a master
// seed so sweep results do not depend on execution order.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master,
                                                  std::uint64_t a,
                                                  std::uint64_t b = 0,
                                                  std::uint64_t c = 0) noexcept {
  return mix_seed(mix_seed(mix_seed(master ^ mix_seed(a)) ^ b) ^ mix_seed(c + 0x51ED));
}

// Seeded generator with platform-independent variate conversions.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The std::*_distribution adaptors are implementation-defined, so
// every conversion used by the simulator is written out here.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  [[nodiscard]] std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  [[nodiscard]] double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1].
  [[nodiscard]] double uniform_open_zero() { return 1.0 - uniform(); }

  [[nodiscard]] bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer on [0, bound). Lemire's multiply-shift without the
  // rejection step; bias is below 2^-40 for the bounds used here (<= 2^24).
  [[nodiscard]] std::uint64_t below(std::uint64_t bound) {
    const auto product = static_cast<unsigned __int128>(engine_()) * bound;
    return static_cast<std::uint64_t>(product >> 64);
  }

  // Number of failures before the first success of a Bernoulli(p) sequence.
  [[nodiscard]] std::uint64_t geometric_failures(double p) {
    if (p >= 1.0) return 0;
    const double draw = std::log(uniform_open_zero()) / std::log1p(-p);
    if (draw >= 9.0e18) return static_cast<std::uint64_t>(9.0e18);
    return static_cast<std::uint64_t>(draw);
  }

  engine_type& engine() noexcept { return engine_; }

 private:
  engine_type engine_;
};

}  // namespace fairmac
