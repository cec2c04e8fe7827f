/* Copyright 2026 The InsLoc Authors. All Rights Reserved.

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

#ifndef INSLOC_RNG_HPP_
#define INSLOC_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace insloc {

using Rng = std::mt19937_64;

// Independent engine for a named sub-stream of a master seed
// ("gallery", "init", "queue", "data", ...).
Rng make_stream(std::uint64_t seed, std::string_view name,
                std::uint64_t index = 0);

// Engine state as a flat list of 32-bit words, for checkpointing.
std::vector<std::uint32_t> save_rng_state(const Rng& rng);
Rng load_rng_state(const std::vector<std::uint32_t>& words);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t h = 0xcbf29ce484222325ULL);

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Uniform integer in [lo, hi].
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

}  // namespace insloc

#endif  // INSLOC_RNG_HPP_
