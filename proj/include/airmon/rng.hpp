#ifndef AIRMON_RNG_HPP
#define AIRMON_RNG_HPP

#include <cstdint>

namespace airmon {

/// splitmix64. The simulator's noise source must be pinned by algorithm,
/// not by library: these three constants fully define it, so any
/// implementation in any language reproduces the same octet streams from
/// the same seed.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint8_t next_byte() { return static_cast<std::uint8_t>(next() & 0xFF); }

  /// Uniform integer in [-amplitude, +amplitude] via modulo reduction.
  /// The modulo bias is < 2^-57 for any amplitude this project uses and is
  /// accepted as part of the pinned algorithm.
  std::int64_t jitter(std::int64_t amplitude) {
    if (amplitude <= 0) return 0;
    const std::uint64_t span = 2 * static_cast<std::uint64_t>(amplitude) + 1;
    return static_cast<std::int64_t>(next() % span) - amplitude;
  }

  /// Uniform in [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

private:
  std::uint64_t state_;
};

} // namespace airmon

#endif
