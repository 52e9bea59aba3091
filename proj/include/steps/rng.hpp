#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "steps/error.hpp"

namespace steps {

// FNV-1a, used for stable request ids and stream labels.
inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 generator. The standard library's distributions are not
// bit-stable across implementations, so every random draw in the pipeline
// goes through this class instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Named sub-stream: stages and per-item draws derive independent streams
  // from one pipeline seed, so any stage can be re-run in isolation.
  static Rng stream(std::uint64_t seed, std::string_view label,
                    std::uint64_t index = 0) {
    std::uint64_t s = mix(seed ^ fnv1a64(label));
    s = mix(s ^ index);
    return Rng(s);
  }

  std::uint64_t state() const { return state_; }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) fail_internal("next_below(0)");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Index drawn with probability proportional to weights[i].
  // Total weight must be positive.
  std::size_t weighted_index(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) fail_internal("weighted_index: total weight not positive");
    double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t state_;
};

}  // namespace steps
