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

// Dense text embeddings: a remote HTTP provider and a deterministic local
// feature-hashing provider.

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragman/retry.hpp"

namespace ragman::embedding {

struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double l2_norm(const EmbeddingVector& v);

enum class ProviderKind { remote, local_hash };

struct EmbeddingProviderConfig {
  ProviderKind kind = ProviderKind::local_hash;
  std::optional<std::string> base_url;
  std::optional<std::string> model_name;
  std::size_t dim = 256;
  std::string api_key_env;
  std::size_t max_in_flight = 4;
  std::size_t batch_size = 64;
  RetryPolicy retry;

  /// Throws InvalidArgument if the kind-specific fields are missing.
  void validate() const;

  static EmbeddingProviderConfig local(std::size_t dim = 256);
  static EmbeddingProviderConfig remote(std::string base_url, std::string model_name,
                                        std::size_t dim = 1536, std::string api_key_env = "");
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// One L2-normalized vector per text, in input order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const = 0;
  virtual std::size_t dim() const = 0;
  /// Identifies kind, model and width; recorded in every index built.
  virtual std::string fingerprint() const = 0;
};

class LocalHashProvider final : public EmbeddingProvider {
 public:
  explicit LocalHashProvider(std::size_t dim);

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;

 private:
  std::size_t dim_;
};

class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(EmbeddingProviderConfig config);

  /// Sends batches of config.batch_size texts, at most config.max_in_flight
  /// concurrently. Throws ProviderError on transport, auth or width errors.
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
  std::size_t dim() const override { return config_.dim; }
  std::string fingerprint() const override;

 private:
  EmbeddingProviderConfig config_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderConfig& config);

/// Lowercases, splits on ASCII non-alphanumerics, hashes each token with
/// FNV-1a 64 into bucket h % dim with sign -1 if bit 63 is set, sums the
/// signed term counts and L2-normalizes. Throws InvalidArgument on dim == 0
/// or "untokenizable input".
EmbeddingVector local_hash_embed(std::string_view text, std::size_t dim);

/// The tokens local_hash_embed sees.
std::vector<std::string> hash_tokens(std::string_view text);

/// Validates inputs (non-empty list, non-empty texts), then embeds through
/// a provider built from `config`.
std::vector<EmbeddingVector> embed_texts(const EmbeddingProviderConfig& config,
                                         std::span<const std::string> texts);
std::vector<EmbeddingVector> embed_texts(const EmbeddingProvider& provider,
                                         std::span<const std::string> texts);

}  // namespace ragman::embedding
