#pragma once

#include <cstdint>

#include "mgrn/linalg.hpp"

namespace mgrn {

/// Deterministic counter-based random stream. A value type: copies advance
/// independently, same (seed, position) always yields the same next value.
///
/// Word generation is splitmix64: word(i) = mix64(seed + (i+1)*GAMMA) with
/// GAMMA = 0x9E3779B97F4A7C15. Draw costs in words:
///   uniform64 / uniform01 / uniform_index : 1 word
///   normal                               : 2 words (Box-Muller, cosine
///                                          branch only, so the cost per
///                                          draw is position-stable)
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed, std::uint64_t position = 0)
      : seed_(seed), position_(position) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

  std::uint64_t uniform64();

  /// Uniform on [0, 1), 53 random bits.
  double uniform01();

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via z = sqrt(-2 ln u1) * cos(2 pi u2), u1 in (0,1].
  double normal();

  /// Practically independent stream for a sub-task; tag selects the child.
  RngStream derive(std::uint64_t tag) const;

  bool operator==(const RngStream&) const = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t position_ = 0;
};

/// n i.i.d. standard normal variates; advances the stream by 2n words.
Vec normal_draws(RngStream& stream, std::size_t n);

/// splitmix64 finalizer; exposed for seed-derivation schemes.
std::uint64_t mix64(std::uint64_t z);

/// FNV-1a over a byte string; used to derive per-cell seeds from text keys.
std::uint64_t fnv1a(const char* data, std::size_t len);

}  // namespace mgrn
