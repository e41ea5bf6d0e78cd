#pragma once

// Counter-based pseudorandom streams. Every draw is a pure function of
// (seed, stream, counter), so substreams can be consumed in any order or
// concurrently without changing results.

#include <cstdint>
#include <vector>

namespace kmdp {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ (mix64(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept : key_(hash_combine(mix64(seed), stream)) {}

  std::uint64_t next() noexcept { return hash_combine(key_, counter_++); }
  double uniform() noexcept { return to_unit(next()); }
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept { return bound == 0 ? 0 : next() % bound; }
  /// Uniform integer on [lo, hi].
  int between(int lo, int hi) noexcept {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  CounterStream split(std::uint64_t stream) const noexcept { return CounterStream(key_, stream, 0); }

 private:
  CounterStream(std::uint64_t parent, std::uint64_t stream, int) noexcept : key_(hash_combine(parent, stream)) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Index drawn by cumulative-mass inversion in declared order. Masses at or
/// below zero are never selected.
inline std::size_t sample_index(const std::vector<double>& masses, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = masses.size();
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (masses[i] <= 0.0) continue;
    cumulative += masses[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

}  // namespace kmdp
