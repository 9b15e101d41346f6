#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace metadrl {

/// Seedable random stream used by every stochastic operation.
///
/// Wraps a 64-bit Mersenne Twister and exposes only the two draws the
/// simulator needs, so that each operation's variate consumption is explicit
/// and reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Consumes exactly one uniform variate.
  int below(int n) {
    int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

  /// Raw 64-bit draw, used to fork child streams.
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Hierarchical seed derivation: run -> purpose -> iteration -> task -> episode.
// Each level mixes the parent seed with a child tag through splitmix64.
std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t tag);
std::uint64_t mix_seed(std::uint64_t parent, std::string_view purpose);

inline Rng derive_rng(std::uint64_t parent, std::uint64_t tag) {
  return Rng(mix_seed(parent, tag));
}

}  // namespace metadrl
