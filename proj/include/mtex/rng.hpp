/* Copyright 2026 The mtex Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MTEX_RNG_HPP_
#define MTEX_RNG_HPP_

#include <cstdint>
#include <random>

namespace mtex {

// The engine's output sequence is fixed by the C++ standard, unlike the
// standard distributions, so all draws go through the helpers below.
using Rng = std::mt19937_64;

// Named sub-streams derived from the single user seed.
enum class SeedStream : std::uint64_t {
  kInit = 1,
  kTriplets = 2,
  kNoise = 3,
  kCrops = 4,
  kGeneratorWeights = 5,
  kEvaluation = 6,
  kMockWeights = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for `stream`: splitmix64(splitmix64(seed) ^ stream).
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// One draw; 53 random bits mapped to [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// One draw; floor(u * n / 2^64) via a 128-bit product.
inline int uniform_index(Rng& rng, int n) {
  const unsigned __int128 product =
      static_cast<unsigned __int128>(rng()) * static_cast<unsigned __int128>(n);
  return static_cast<int>(product >> 64);
}

/// One draw; uniform on [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace mtex

#endif  // MTEX_RNG_HPP_
