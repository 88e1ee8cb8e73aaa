#pragma once

#include <cstdint>
#include <random>

namespace mpa {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to fan a single user seed out into independent
// streams so that per-seed and per-purpose generators never share state.
std::uint64_t mix_seed(std::uint64_t x);

// Deterministic child seed for stream `stream` of `parent`.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

// Well-known stream identifiers so call sites stay readable.
namespace streams {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t chunking = 3;
inline constexpr std::uint64_t dropout = 4;
inline constexpr std::uint64_t split = 5;
inline constexpr std::uint64_t scores = 6;
inline constexpr std::uint64_t performances = 7;
inline constexpr std::uint64_t label_noise = 8;
}  // namespace streams

}  // namespace mpa
