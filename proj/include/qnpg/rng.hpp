#pragma once

#include <cstdint>
#include <string_view>

namespace qnpg {

/**
 * Counter-based SplitMix64 generator, format name "splitmix64-ctr/1".
 *
 *   mix(z)   = SplitMix64 finalizer (shifts 30/27/31, multipliers
 *              0xBF58476D1CE4E5B9 and 0x94D049BB133111EB)
 *   key      = mix(seed ^ mix(stream))
 *   u64(k)   = mix(key + (k + 1) · 0x9E3779B97F4A7C15),  k = 0, 1, 2, ...
 *   double   = (u64 >> 11) · 2⁻⁵³  ∈ [0, 1)
 *   below(n) = first u64 x ≥ (2⁶⁴ mod n), returned as x mod n
 *
 * Outputs depend only on (seed, stream, counter), so independent streams
 * are obtained by choosing a different stream id.
 */
class CounterRng {
 public:
  static constexpr std::string_view kName = "splitmix64-ctr/1";

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static std::uint64_t mix(std::uint64_t z);

  std::uint64_t next_u64();
  double next_double();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t next_below(std::uint64_t n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qnpg
