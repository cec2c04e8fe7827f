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

// Binary checkpoint container. All integers little-endian:
//
//   "ILCK" | u32 version | u64 config hash | u64 step | u64 blob count
//   per blob: u32 name length | name bytes | u32 dtype | u64 rank |
//             rank x u64 dims | prod(dims) x 32-bit values

#ifndef INSLOC_CHECKPOINT_HPP_
#define INSLOC_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "insloc/tensor.hpp"

namespace insloc {

inline constexpr char kCheckpointMagic[4] = {'I', 'L', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class BlobType : std::uint32_t { kFloat32 = 0, kUint32 = 1 };

struct Blob {
  std::string name;
  BlobType type = BlobType::kFloat32;
  Shape dims;
  std::vector<std::uint32_t> words;  // raw 32-bit payload

  static Blob from_tensor(std::string name, const Tensor<float>& t);
  static Blob from_words(std::string name, std::vector<std::uint32_t> words);
  Tensor<float> to_tensor() const;

  bool operator==(const Blob&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::uint64_t step = 0;
  std::vector<Blob> blobs;

  // Throws InvalidArgument naming the missing blob.
  const Blob& blob(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
// ParseError (with byte offset) on bad magic, version, or truncation.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace insloc

#endif  // INSLOC_CHECKPOINT_HPP_
