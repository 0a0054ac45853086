#pragma once

#include <cstdint>
#include <random>

namespace trimap {

using Rng = std::mt19937_64;

// Independent generator for substream `stream` of master seed `seed`.
// Substreams let per-point and per-tree work run in any order with identical output.
inline Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint32_t tag = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), tag};
  return Rng(seq);
}

// Stream tags keep the generators of different stages disjoint.
namespace stream_tag {
inline constexpr std::uint32_t kForest = 1;
inline constexpr std::uint32_t kTriplets = 2;
inline constexpr std::uint32_t kPca = 3;
inline constexpr std::uint32_t kSubsample = 4;
inline constexpr std::uint32_t kSynthetic = 5;
}  // namespace stream_tag

}  // namespace trimap
