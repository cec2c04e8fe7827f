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

#include "insloc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "insloc/errors.hpp"

namespace insloc {
namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw ParseError(std::string("truncated checkpoint reading ") + what +
                           ": expected " + std::to_string(n) +
                           " bytes, found " + std::to_string(in_.size() - pos_),
                       pos_);
    }
  }
  template <typename U>
  U le(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

Blob Blob::from_tensor(std::string name, const Tensor<float>& t) {
  Blob b;
  b.name = std::move(name);
  b.type = BlobType::kFloat32;
  b.dims = t.shape();
  b.words.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    b.words[i] = std::bit_cast<std::uint32_t>(t[i]);
  }
  return b;
}

Blob Blob::from_words(std::string name, std::vector<std::uint32_t> words) {
  Blob b;
  b.name = std::move(name);
  b.type = BlobType::kUint32;
  b.dims = {words.size()};
  b.words = std::move(words);
  return b;
}

Tensor<float> Blob::to_tensor() const {
  if (type != BlobType::kFloat32) {
    throw InvalidArgument("blob '" + name + "' is not float32");
  }
  Tensor<float> t(dims);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = std::bit_cast<float>(words[i]);
  }
  return t;
}

const Blob& Checkpoint::blob(const std::string& name) const {
  for (const auto& b : blobs) {
    if (b.name == name) return b;
  }
  throw InvalidArgument("checkpoint has no blob named '" + name + "'");
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.le<std::uint32_t>(ckpt.version);
  w.le<std::uint64_t>(ckpt.config_hash);
  w.le<std::uint64_t>(ckpt.step);
  w.le<std::uint64_t>(ckpt.blobs.size());
  for (const auto& b : ckpt.blobs) {
    std::size_t count = 1;
    for (auto d : b.dims) count *= d;
    if (count != b.words.size() || b.dims.empty()) {
      throw ShapeError("blob '" + b.name + "' dims " + shape_string(b.dims) +
                       " disagree with its " + std::to_string(b.words.size()) +
                       " values");
    }
    w.le<std::uint32_t>(static_cast<std::uint32_t>(b.name.size()));
    w.bytes(b.name.data(), b.name.size());
    w.le<std::uint32_t>(static_cast<std::uint32_t>(b.type));
    w.le<std::uint64_t>(b.dims.size());
    for (auto d : b.dims) w.le<std::uint64_t>(d);
    for (auto v : b.words) w.le<std::uint32_t>(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw ParseError("bad checkpoint magic: expected \"ILCK\"", 0);
  }
  Reader r(bytes);
  r.str(4, "magic");
  Checkpoint c;
  const std::size_t version_at = r.pos();
  c.version = r.le<std::uint32_t>("version");
  if (c.version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " +
                         std::to_string(c.version) + ", expected " +
                         std::to_string(kCheckpointVersion),
                     version_at);
  }
  c.config_hash = r.le<std::uint64_t>("config hash");
  c.step = r.le<std::uint64_t>("step");
  const std::uint64_t count = r.le<std::uint64_t>("blob count");
  for (std::uint64_t i = 0; i < count; ++i) {
    Blob b;
    const auto name_len = r.le<std::uint32_t>("blob name length");
    b.name = r.str(name_len, "blob name");
    const std::size_t type_at = r.pos();
    const auto type = r.le<std::uint32_t>("blob dtype");
    if (type > 1) {
      throw ParseError("unknown dtype tag " + std::to_string(type) +
                           " for blob '" + b.name + "'",
                       type_at);
    }
    b.type = static_cast<BlobType>(type);
    const std::size_t rank_at = r.pos();
    const auto rank = r.le<std::uint64_t>("blob rank");
    if (rank == 0 || rank > 8) {
      throw ParseError("implausible rank " + std::to_string(rank) +
                           " for blob '" + b.name + "'",
                       rank_at);
    }
    std::uint64_t n = 1;
    for (std::uint64_t d = 0; d < rank; ++d) {
      b.dims.push_back(r.le<std::uint64_t>("blob dims"));
      n *= b.dims.back();
    }
    if (n > r.remaining() / 4) r.need(n * 4, "blob values");
    b.words.resize(n);
    for (auto& v : b.words) v = r.le<std::uint32_t>("blob values");
    c.blobs.push_back(std::move(b));
  }
  if (r.remaining() != 0) {
    throw ParseError(std::to_string(r.remaining()) +
                         " trailing bytes after the last blob",
                     r.pos());
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  }
}

}  // namespace insloc
