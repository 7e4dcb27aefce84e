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

#include "ragman/embedding.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "http_client.hpp"
#include "ragman/error.hpp"
#include "ragman/text.hpp"

namespace ragman::embedding {
namespace {

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

EmbeddingVector normalized(const std::vector<double>& acc) {
  double ss = 0.0;
  for (double x : acc) ss += x * x;
  EmbeddingVector v;
  v.values.resize(acc.size());
  const double inv = 1.0 / std::sqrt(ss);
  for (std::size_t i = 0; i < acc.size(); ++i) v.values[i] = static_cast<float>(acc[i] * inv);
  return v;
}

}  // namespace

double l2_norm(const EmbeddingVector& v) {
  double ss = 0.0;
  for (float x : v.values) ss += static_cast<double>(x) * x;
  return std::sqrt(ss);
}

void EmbeddingProviderConfig::validate() const {
  if (kind == ProviderKind::remote) {
    if (!base_url || base_url->empty()) throw InvalidArgument("remote provider requires base_url");
    if (!model_name || model_name->empty()) {
      throw InvalidArgument("remote provider requires model_name");
    }
  }
  if (dim == 0) throw InvalidArgument("embedding dim must be > 0");
  if (batch_size == 0) throw InvalidArgument("batch_size must be > 0");
  if (max_in_flight == 0) throw InvalidArgument("max_in_flight must be > 0");
}

EmbeddingProviderConfig EmbeddingProviderConfig::local(std::size_t dim) {
  EmbeddingProviderConfig c;
  c.kind = ProviderKind::local_hash;
  c.dim = dim;
  return c;
}

EmbeddingProviderConfig EmbeddingProviderConfig::remote(std::string base_url, std::string model_name,
                                                        std::size_t dim, std::string api_key_env) {
  EmbeddingProviderConfig c;
  c.kind = ProviderKind::remote;
  c.base_url = std::move(base_url);
  c.model_name = std::move(model_name);
  c.dim = dim;
  c.api_key_env = std::move(api_key_env);
  return c;
}

std::vector<std::string> hash_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

EmbeddingVector local_hash_embed(std::string_view text, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("embedding dim must be > 0");
  const auto tokens = hash_tokens(text);
  if (tokens.empty()) throw InvalidArgument("untokenizable input");

  std::vector<double> signed_acc(dim, 0.0);
  std::vector<double> unsigned_acc(dim, 0.0);
  for (const auto& tok : tokens) {
    const std::uint64_t h = text::fnv1a64(tok);
    const std::size_t bucket = static_cast<std::size_t>(h % dim);
    signed_acc[bucket] += (h >> 63) ? -1.0 : 1.0;
    unsigned_acc[bucket] += 1.0;
  }
  bool all_zero = true;
  for (double x : signed_acc) all_zero = all_zero && x == 0.0;
  // Opposite-signed collisions can cancel completely; the unsigned counts
  // are still a function of the token multiset alone.
  return normalized(all_zero ? unsigned_acc : signed_acc);
}

LocalHashProvider::LocalHashProvider(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InvalidArgument("embedding dim must be > 0");
}

std::vector<EmbeddingVector> LocalHashProvider::embed(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(local_hash_embed(t, dim_));
  return out;
}

std::string LocalHashProvider::fingerprint() const {
  return "local_hash:fnv1a64:" + std::to_string(dim_);
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(EmbeddingProviderConfig config)
    : config_(std::move(config)) {
  config_.validate();
  detail::parse_base_url(*config_.base_url);
}

std::string RemoteEmbeddingProvider::fingerprint() const {
  return "remote:" + *config_.model_name + ":" + std::to_string(config_.dim);
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed(std::span<const std::string> texts) const {
  const auto endpoint = detail::parse_base_url(*config_.base_url);
  const auto key = detail::api_key_from_env(config_.api_key_env);
  const std::size_t batch = config_.batch_size;
  const std::size_t n_batches = (texts.size() + batch - 1) / batch;

  std::vector<EmbeddingVector> out(texts.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&]() {
    while (true) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_batches) return;
      {
        std::lock_guard lock(failure_mu);
        if (failure) return;
      }
      const std::size_t begin = b * batch;
      const std::size_t end = std::min(begin + batch, texts.size());
      try {
        nlohmann::json input = nlohmann::json::array();
        for (std::size_t i = begin; i < end; ++i) input.push_back(texts[i]);
        const nlohmann::json body = {{"model", *config_.model_name}, {"input", input}};
        const auto resp = detail::post_json(endpoint, "/embeddings", body, key, config_.retry);

        const auto& data = resp.at("data");
        if (!data.is_array() || data.size() != end - begin) {
          throw ProviderError("embedding response has " + std::to_string(data.size()) +
                              " items for " + std::to_string(end - begin) + " inputs");
        }
        for (std::size_t k = 0; k < data.size(); ++k) {
          const auto& item = data[k];
          const std::size_t idx = item.contains("index") ? item.at("index").get<std::size_t>() : k;
          if (idx >= end - begin) throw ProviderError("embedding response index out of range");
          const auto& emb = item.at("embedding");
          if (emb.size() != config_.dim) {
            throw ProviderError("provider returned dimension " + std::to_string(emb.size()) +
                                ", expected " + std::to_string(config_.dim));
          }
          std::vector<double> acc(config_.dim);
          for (std::size_t d = 0; d < config_.dim; ++d) acc[d] = emb[d].get<double>();
          double ss = 0.0;
          for (double x : acc) ss += x * x;
          if (ss == 0.0) throw ProviderError("provider returned a zero vector");
          out[begin + idx] = normalized(acc);
        }
      } catch (const nlohmann::json::exception& e) {
        std::lock_guard lock(failure_mu);
        if (!failure) {
          failure = std::make_exception_ptr(
              ProviderError(std::string("malformed embedding response: ") + e.what()));
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t n_threads = std::min(config_.max_in_flight, n_batches);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& v : out) {
    if (v.dim() != config_.dim) throw ProviderError("embedding response missing items");
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderConfig& config) {
  config.validate();
  if (config.kind == ProviderKind::local_hash) return std::make_unique<LocalHashProvider>(config.dim);
  return std::make_unique<RemoteEmbeddingProvider>(config);
}

std::vector<EmbeddingVector> embed_texts(const EmbeddingProvider& provider,
                                         std::span<const std::string> texts) {
  if (texts.empty()) throw InvalidArgument("embed_texts requires at least one text");
  for (const auto& t : texts) {
    if (t.empty()) throw InvalidArgument("embed_texts received an empty text");
  }
  auto vectors = provider.embed(texts);
  if (vectors.size() != texts.size()) throw ProviderError("provider returned wrong vector count");
  return vectors;
}

std::vector<EmbeddingVector> embed_texts(const EmbeddingProviderConfig& config,
                                         std::span<const std::string> texts) {
  return embed_texts(*make_provider(config), texts);
}

}  // namespace ragman::embedding
