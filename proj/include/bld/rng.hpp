#pragma once

#include <cstdint>
#include <random>

namespace bld {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded random stream. Uniform draws take the top 53 bits of the engine
/// output so bit-level results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Reject the tail that would bias the modulo.
    const std::uint64_t limit = span == 0 ? 0 : (~std::uint64_t{0} / span) * span;
    std::uint64_t r = engine_();
    while (limit != 0 && r >= limit) r = engine_();
    return lo + static_cast<std::int64_t>(span == 0 ? r : r % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Stream for chain / example `index` under `master`: master XOR index.
inline Rng chain_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(master ^ index);
}

/// Stream keyed by (seed, a, b) with full avalanche between keys.
inline Rng keyed_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(mix_seed(mix_seed(mix_seed(seed) ^ a) ^ b));
}

}  // namespace bld
