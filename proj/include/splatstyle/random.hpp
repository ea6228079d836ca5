#pragma once

#include <cstdint>
#include <random>

namespace splatstyle {

/// The engine behind every seeded operation. mt19937_64 has a fully specified
/// output sequence, so seeded results are identical across platforms.
using Rng = std::mt19937_64;

/// Unbiased draw from [0, n) by rejection. Unlike std::uniform_int_distribution,
/// the mapping from engine output to result is fixed, keeping outputs portable.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  std::uint64_t x = rng();
  while (x < threshold) x = rng();
  return x % n;
}

}  // namespace splatstyle
