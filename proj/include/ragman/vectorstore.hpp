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

// Exact cosine top-k index over chunks, one instance per knowledge base,
// with a versioned, checksummed binary file format (docs/formats.md).

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ragman/corpus.hpp"
#include "ragman/embedding.hpp"
#include "ragman/error.hpp"

namespace ragman::vectorstore {

using embedding::EmbeddingVector;

/// The index file declares a format version this build does not read.
class VersionError : public CorruptionError {
 public:
  using CorruptionError::CorruptionError;
};

/// u.v / (|u| |v|). Throws InvalidArgument on dimension mismatch or a zero
/// vector.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

struct IndexEntry {
  std::string chunk_id;
  EmbeddingVector vector;
  std::string text;

  bool operator==(const IndexEntry&) const = default;
};

struct RetrievalResult {
  std::string chunk_id;
  double score = 0.0;
  std::string text;

  bool operator==(const RetrievalResult&) const = default;
};

class VectorIndex {
 public:
  VectorIndex(std::size_t dim, std::string provider_fingerprint);

  /// Throws InvalidArgument on a duplicate chunk_id or wrong width.
  void add(IndexEntry entry);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& provider_fingerprint() const noexcept { return fingerprint_; }
  std::span<const IndexEntry> entries() const noexcept { return entries_; }
  bool contains(const std::string& chunk_id) const;

  /// The k highest-cosine entries, score descending, ties by ascending
  /// chunk_id. Returns every entry when k exceeds the size. Safe to call
  /// concurrently.
  std::vector<RetrievalResult> search(const EmbeddingVector& query, std::size_t k) const;

  bool operator==(const VectorIndex&) const = default;

 private:
  std::size_t dim_;
  std::string fingerprint_;
  std::vector<IndexEntry> entries_;
};

/// Embeds every chunk's text and indexes it. Throws InvalidArgument on an
/// empty input or duplicate chunk ids; provider errors propagate.
VectorIndex build_index(std::span<const corpus::Chunk> chunks,
                        const embedding::EmbeddingProvider& provider);
VectorIndex build_index(std::span<const corpus::Chunk> chunks,
                        const embedding::EmbeddingProviderConfig& config);

inline std::vector<RetrievalResult> search(const VectorIndex& index, const EmbeddingVector& query,
                                           std::size_t k) {
  return index.search(query, k);
}

/// Serialized form, as bytes.
std::vector<unsigned char> serialize(const VectorIndex& index);
/// Throws CorruptionError (or VersionError) on malformed input.
VectorIndex deserialize(std::span<const unsigned char> bytes);

/// Writes atomically (temp file + rename). Throws IoError.
void save_index(const VectorIndex& index, const std::filesystem::path& path);
/// Throws IoError, CorruptionError or VersionError.
VectorIndex load_index(const std::filesystem::path& path);

}  // namespace ragman::vectorstore
