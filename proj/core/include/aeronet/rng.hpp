#pragma once

#include <cstdint>
#include <random>

namespace aeronet {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent child seeds from a
/// master seed so that parallel jobs never share a stream.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632BE59BD9B4E019ULL));
}

// Named streams keep seed derivation stable when stages are added.
namespace streams {
inline constexpr std::uint64_t esn = 1;
inline constexpr std::uint64_t clustering = 2;
inline constexpr std::uint64_t placement = 3;
inline constexpr std::uint64_t trajectory = 4;
inline constexpr std::uint64_t fixture = 5;
}  // namespace streams

}  // namespace aeronet
