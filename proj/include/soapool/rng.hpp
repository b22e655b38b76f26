#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace soapool {

/// PCG64 (XSL-RR 128/64) generator.
///
/// Seeding is defined here rather than inherited from any library so that
/// streams can be reproduced bit-for-bit in other languages:
///   state0 = (splitmix64(seed) << 64) | splitmix64(seed ^ 0xda3e39cb94b95bdb)
///   inc    = ((splitmix64(stream) << 64) | splitmix64(~stream)) | 1
///   state  = 0; step(); state += state0; step();
/// where step() is state = state * MUL + inc, following the reference
/// pcg "srandom" procedure. MUL is the 128-bit PCG default multiplier.
class Pcg64 {
 public:
  using result_type = std::uint64_t;

  explicit Pcg64(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (no cached second variate).
  double normal();
  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  unsigned __int128 state_;
  unsigned __int128 inc_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Order-sensitive mix of several words into one seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// Fisher-Yates using Pcg64::below, so the permutation is reproducible
/// independently of the standard library's shuffle algorithm.
template <typename T>
void shuffle(std::span<T> items, Pcg64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<std::size_t> random_permutation(std::size_t n, Pcg64& rng);

}  // namespace soapool
