#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace prunekit {

/// Deterministic RNG. Sampling is implemented here rather than with
/// std::*_distribution so that streams are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : gen_(static_cast<std::uint32_t>(seed ^ (seed >> 32)) + 0x9e3779b9u) {}

  std::uint32_t next_u32() { return gen_(); }

  /// Uniform in [0, 1) with 24 bits of resolution.
  float uniform() { return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f); }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive range.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u32() % static_cast<std::uint32_t>(hi - lo + 1));
  }

  /// Box-Muller.
  float normal() {
    float u1 = uniform();
    if (u1 < 1e-12f) u1 = 1e-12f;
    float u2 = uniform();
    return std::sqrt(-2.0f * std::log(u1)) *
           std::cos(6.28318530717958647692f * u2);
  }

  float normal(float mean, float stddev) { return mean + stddev * normal(); }

  /// Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937 gen_;
};

/// Stable mix of a base seed with a stream index (per-epoch, per-iteration
/// derivations stay reproducible under resume).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t x = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace prunekit
