// Copyright 2026 The rxleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <boost/random/uniform_int_distribution.hpp>

namespace rxleak {

/// Engine used for every random stream in the library.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives the seed of sub-stream `stream` from `seed`:
///     mix_seed(s, k) = splitmix64(splitmix64(s) ^ k)
/// This function is part of the reproducibility contract. Changing it changes
/// every simulated dataset.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ stream);
}

/// Engine for shot `shot_index` of a batch seeded with `seed`.
inline Rng shot_rng(std::uint64_t seed, std::uint64_t shot_index) {
    return Rng(mix_seed(seed, shot_index));
}

/// Fisher-Yates shuffle with Boost's integer distribution, so the permutation
/// for a given engine state is the same on every standard library.
template <typename T>
void shuffle_in_place(std::vector<T> &v, Rng &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(v[i - 1], v[pick(rng)]);
    }
}

/// Named salts for the independent streams an experiment derives from one seed.
namespace streams {
inline constexpr std::uint64_t kTraining = 0x7472'6169'6E00ULL;
inline constexpr std::uint64_t kEvaluation = 0x6576'616C'0000ULL;
inline constexpr std::uint64_t kAttack = 0x6174'7461'636BULL;
inline constexpr std::uint64_t kDefense = 0x6465'6665'6E73ULL;
inline constexpr std::uint64_t kPads = 0x7061'6473'0000ULL;
inline constexpr std::uint64_t kMapping = 0x6D61'7070'696EULL;
}  // namespace streams

}  // namespace rxleak
