#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace mrcs {

/**
 * Counter-based 64-bit generator.
 *
 * Output i of a stream is splitmix64_finalize(key + i * 0x9E3779B97F4A7C15),
 * i = 1, 2, ... The key is derived from a user seed and a textual label
 * (e.g. "scenario/rep=3/errors") as
 *
 *   key = splitmix64_finalize(seed ^ splitmix64_finalize(fnv1a64(label)))
 *
 * so every (seed, label) pair names an independent, reproducible stream and
 * any position can be reached without generating the prefix. Distribution
 * transforms (uniform, normal, Bernoulli, bounded integers) are implemented
 * here rather than taken from <random> so that draws are identical across
 * standard library implementations.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  static CounterRng stream(std::uint64_t seed, std::string_view label);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (pairs are cached).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, bound), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64_finalize(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view text);

/// Random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> permutation(std::size_t n, CounterRng& rng);

}  // namespace mrcs
