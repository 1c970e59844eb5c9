#pragma once

#include <cstdint>

namespace ctproj {

/// SplitMix64 finalizer. Used only to derive generator states from user seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// xorshift64* (Vigna 2014), versioned as "xorshift64star-v1".
///
///   state  = splitmix64(seed), replaced by 0x9E3779B97F4A7C15 if zero
///   next() : x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
///   below(n)    = ((next() >> 32) * n) >> 32          (n < 2^32, no rejection)
///   uniform01() = (next() >> 11) * 2^-53              in [0, 1)
///
/// Everything derived from it (phantom noise, shuffles, augmentation draws)
/// is specified in terms of these three primitives so other implementations
/// can reproduce outputs byte for byte.
class Xorshift64Star {
 public:
  static constexpr const char* kName = "xorshift64star-v1";

  explicit constexpr Xorshift64Star(std::uint64_t seed) noexcept : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
  }

  /// Independent stream for counter-based draws: seed mixed with a stream index.
  static constexpr Xorshift64Star for_stream(std::uint64_t seed, std::uint64_t index) noexcept {
    return Xorshift64Star(seed ^ splitmix64(index));
  }

  constexpr std::uint64_t next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  constexpr std::uint32_t below(std::uint32_t n) noexcept {
    return static_cast<std::uint32_t>(((next() >> 32) * static_cast<std::uint64_t>(n)) >> 32);
  }

  /// Integer uniformly drawn from the closed interval [lo, hi].
  constexpr int uniform_int(int lo, int hi) noexcept {
    return lo + static_cast<int>(below(static_cast<std::uint32_t>(hi - lo + 1)));
  }

  constexpr double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

 private:
  std::uint64_t state_;
};

}  // namespace ctproj
