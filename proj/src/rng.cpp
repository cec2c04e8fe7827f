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

#include "insloc/rng.hpp"

#include <sstream>

#include "insloc/errors.hpp"

namespace insloc {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng make_stream(std::uint64_t seed, std::string_view name,
                std::uint64_t index) {
  const std::uint64_t tag = fnv1a64(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

// The textual engine representation is the standard-mandated state dump:
// the 312 state words followed by the position index.
std::vector<std::uint32_t> save_rng_state(const Rng& rng) {
  std::stringstream ss;
  ss << rng;
  std::vector<std::uint32_t> words;
  std::uint64_t v = 0;
  while (ss >> v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  return words;
}

Rng load_rng_state(const std::vector<std::uint32_t>& words) {
  if (words.empty() || words.size() % 2 != 0) {
    throw InvalidArgument("rng state must hold an even, non-zero word count");
  }
  std::stringstream ss;
  for (std::size_t i = 0; i < words.size(); i += 2) {
    const std::uint64_t v =
        static_cast<std::uint64_t>(words[i]) |
        (static_cast<std::uint64_t>(words[i + 1]) << 32);
    if (i) ss << ' ';
    ss << v;
  }
  Rng rng;
  ss >> rng;
  if (ss.fail()) throw InvalidArgument("rng state is not a valid engine dump");
  return rng;
}

}  // namespace insloc
