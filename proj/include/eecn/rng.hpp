// include/eecn/rng.hpp
// SplitMix64 generator (Steele/Lea/Vigna constants). The algorithm is fixed
// here so traces replay identically on every platform; std:: distributions
// are implementation-defined and therefore avoided.

#pragma once

#include <cstdint>
#include <string_view>

namespace eecn {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 significant bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound). Plain modulo; the bias is irrelevant here.
  std::uint64_t next_below(std::uint64_t bound) {
    return bound == 0 ? 0 : next() % bound;
  }

 private:
  std::uint64_t state_;
};

// FNV-1a, used to derive independent named streams from one run seed.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x00000100000001b3ull;
  }
  return h;
}

inline SplitMix64 seeded_stream(std::uint64_t seed, std::string_view name) {
  return SplitMix64(seed ^ fnv1a(name));
}

}  // namespace eecn
