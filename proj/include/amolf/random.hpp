#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace amolf {

// Independent streams drawn from one user seed.
enum class RngStream : std::uint64_t {
  data = 0x6d61747269785f69ULL,
  init = 0x6e65745f636f6e74ULL,
  folds = 0x6b5f666f6c647321ULL,
};

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, RngStream stream);

// Uniform on [0, 1) with 53 random bits; identical on every platform, unlike
// std::uniform_real_distribution.
double uniform01(Rng& rng);

// Uniform integer in [0, n), by rejection.
std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace amolf
