// Copyright 2026 The RAGMan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ragman/vectorstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string_view>

#include "ragman/text.hpp"

namespace ragman::vectorstore {
namespace {

constexpr std::string_view kMagicStem = "RGMIDX";
constexpr char kFormatVersion = '1';
constexpr std::size_t kMagicSize = 7;
constexpr std::size_t kChecksumSize = 8;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void str(std::string_view s) {
    if (s.size() > UINT32_MAX) throw InvalidArgument("string too long for index format");
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> data) : data_(data) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw CorruptionError("index payload truncated");
  }

  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
};

double dot_over_norms(const EmbeddingVector& u, const EmbeddingVector& v) {
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double a = u.values[i];
    const double b = v.values[i];
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) throw InvalidArgument("cosine of a zero vector");
  return dot / (std::sqrt(uu) * std::sqrt(vv));
}

}  // namespace

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(u.dim()) + " vs " +
                          std::to_string(v.dim()));
  }
  return dot_over_norms(u, v);
}

VectorIndex::VectorIndex(std::size_t dim, std::string provider_fingerprint)
    : dim_(dim), fingerprint_(std::move(provider_fingerprint)) {
  if (dim_ == 0) throw InvalidArgument("index dim must be > 0");
}

bool VectorIndex::contains(const std::string& chunk_id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const IndexEntry& e) { return e.chunk_id == chunk_id; });
}

void VectorIndex::add(IndexEntry entry) {
  if (entry.vector.dim() != dim_) {
    throw InvalidArgument("entry '" + entry.chunk_id + "' has dim " +
                          std::to_string(entry.vector.dim()) + ", index dim " +
                          std::to_string(dim_));
  }
  if (contains(entry.chunk_id)) throw InvalidArgument("duplicate chunk_id '" + entry.chunk_id + "'");
  entries_.push_back(std::move(entry));
}

std::vector<RetrievalResult> VectorIndex::search(const EmbeddingVector& query, std::size_t k) const {
  if (query.dim() != dim_) {
    throw InvalidArgument("query dim " + std::to_string(query.dim()) + " != index dim " +
                          std::to_string(dim_));
  }
  if (k == 0) throw InvalidArgument("k must be >= 1");

  std::vector<double> scores(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    scores[i] = dot_over_norms(query, entries_[i].vector);
  }
  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return entries_[a].chunk_id < entries_[b].chunk_id;
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    better);

  std::vector<RetrievalResult> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = entries_[order[i]];
    out.push_back({e.chunk_id, scores[order[i]], e.text});
  }
  return out;
}

VectorIndex build_index(std::span<const corpus::Chunk> chunks,
                        const embedding::EmbeddingProvider& provider) {
  if (chunks.empty()) throw InvalidArgument("build_index requires at least one chunk");
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  auto vectors = embedding::embed_texts(provider, texts);

  VectorIndex index(provider.dim(), provider.fingerprint());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    index.add({chunks[i].chunk_id, std::move(vectors[i]), chunks[i].text});
  }
  return index;
}

VectorIndex build_index(std::span<const corpus::Chunk> chunks,
                        const embedding::EmbeddingProviderConfig& config) {
  return build_index(chunks, *embedding::make_provider(config));
}

std::vector<unsigned char> serialize(const VectorIndex& index) {
  Writer w;
  w.bytes(kMagicStem);
  w.bytes(std::string_view(&kFormatVersion, 1));
  w.u32(static_cast<std::uint32_t>(index.dim()));
  w.u64(index.size());
  w.str(index.provider_fingerprint());
  for (const auto& e : index.entries()) {
    w.str(e.chunk_id);
    w.str(e.text);
    for (float x : e.vector.values) w.f32(x);
  }
  auto& buf = w.buffer();
  const auto checksum = text::fnv1a64(std::span<const unsigned char>(buf).subspan(kMagicSize));
  w.u64(checksum);
  return std::move(buf);
}

VectorIndex deserialize(std::span<const unsigned char> bytes) {
  if (bytes.size() < kMagicSize) throw CorruptionError("index file truncated");
  const std::string_view magic(reinterpret_cast<const char*>(bytes.data()), kMagicSize);
  if (magic.substr(0, kMagicStem.size()) != kMagicStem) {
    throw CorruptionError("not an index file (bad magic)");
  }
  if (magic.back() != kFormatVersion) {
    throw VersionError(std::string("unsupported index format version '") + magic.back() + "'");
  }
  if (bytes.size() < kMagicSize + kChecksumSize) throw CorruptionError("index file truncated");

  const auto payload = bytes.subspan(kMagicSize, bytes.size() - kMagicSize - kChecksumSize);
  std::uint64_t stored = 0;
  for (std::size_t i = 0; i < kChecksumSize; ++i) {
    stored |= static_cast<std::uint64_t>(bytes[bytes.size() - kChecksumSize + i]) << (8 * i);
  }
  if (text::fnv1a64(payload) != stored) throw CorruptionError("index checksum mismatch");

  Reader r(payload);
  const std::uint32_t dim = r.u32();
  const std::uint64_t count = r.u64();
  if (dim == 0) throw CorruptionError("index header declares dim 0");
  VectorIndex index(dim, r.str());
  for (std::uint64_t i = 0; i < count; ++i) {
    IndexEntry e;
    e.chunk_id = r.str();
    e.text = r.str();
    e.vector.values.resize(dim);
    for (auto& x : e.vector.values) x = r.f32();
    try {
      index.add(std::move(e));
    } catch (const InvalidArgument& err) {
      throw CorruptionError(std::string("invalid index entry: ") + err.what());
    }
  }
  if (!r.done()) throw CorruptionError("trailing bytes after index records");
  return index;
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  const auto bytes = serialize(index);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

VectorIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read " + path.string());
  return deserialize(bytes);
}

}  // namespace ragman::vectorstore
