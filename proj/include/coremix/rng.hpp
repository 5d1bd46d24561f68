#pragma once

// Seeded randomness helpers. Only std::mt19937_64 (whose output sequence the
// standard fixes) is used as an engine; the distributions are written out here
// because the std:: ones are implementation-defined and would break replay.

#include <cstdint>
#include <random>
#include <string_view>

namespace coremix {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Streaming 64-bit hash: FNV-1a over bytes, finalized with splitmix64.
class Hasher {
public:
  Hasher &bytes(std::string_view s) noexcept {
    for (unsigned char c : s) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  // Length-prefixed so ("ab","c") and ("a","bc") differ.
  Hasher &str(std::string_view s) noexcept {
    u64(s.size());
    return bytes(s);
  }
  Hasher &u64(std::uint64_t v) noexcept {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xffU;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  std::uint64_t digest() const noexcept { return splitmix64(state_); }

private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform_real(Rng &rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t uniform_index(Rng &rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

inline bool bernoulli(Rng &rng, double p) { return uniform01(rng) < p; }

} // namespace coremix
