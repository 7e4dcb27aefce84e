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

#include "http_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "ragman/error.hpp"

namespace ragman::detail {

Endpoint parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("base_url must start with http:// or https://: " + base_url);
  }
  const std::string scheme = base_url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("unsupported URL scheme '" + scheme + "'");
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.scheme_host_port = base_url.substr(0, path_start);
  if (ep.scheme_host_port.size() == scheme_end + 3) {
    throw InvalidArgument("base_url has no host: " + base_url);
  }
  if (path_start != std::string::npos) {
    ep.path_prefix = base_url.substr(path_start);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  }
  return ep;
}

std::optional<std::string> api_key_from_env(const std::string& env_name) {
  if (env_name.empty()) return std::nullopt;
  const char* v = std::getenv(env_name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

nlohmann::json post_json(const Endpoint& endpoint, const std::string& path,
                         const nlohmann::json& body, const std::optional<std::string>& bearer,
                         const RetryPolicy& policy) {
  httplib::Client client(endpoint.scheme_host_port);
  client.set_connection_timeout(policy.timeout);
  client.set_read_timeout(policy.timeout);
  client.set_write_timeout(policy.timeout);

  httplib::Headers headers;
  if (bearer) headers.emplace("Authorization", "Bearer " + *bearer);

  const std::string url = endpoint.path_prefix + path;
  const std::string payload = body.dump();
  const int attempts = std::max(policy.attempts, 1);
  auto backoff = policy.initial_backoff;
  std::string last_error;

  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Post(url, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
    } else if (res->status == 401 || res->status == 403) {
      throw ProviderError("provider rejected credentials (HTTP " + std::to_string(res->status) + ")",
                          /*auth_failure=*/true);
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status < 200 || res->status >= 300) {
      throw ProviderError("provider returned HTTP " + std::to_string(res->status));
    } else {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error&) {
        throw ProviderError("provider returned malformed JSON");
      }
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw ProviderError("provider unreachable after " + std::to_string(attempts) +
                      " attempts: " + last_error);
}

}  // namespace ragman::detail
