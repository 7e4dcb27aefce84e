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

// JSON-over-HTTP POST with bounded retries, shared by the remote providers.
// Internal header.

#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "ragman/retry.hpp"

namespace ragman::detail {

struct Endpoint {
  std::string scheme_host_port;  // e.g. "https://api.example.com:443"
  std::string path_prefix;       // e.g. "/v1", never ends with '/'
};

/// Splits "http[s]://host[:port][/prefix]". Throws InvalidArgument.
Endpoint parse_base_url(const std::string& base_url);

/// Reads the bearer token from the named environment variable; empty
/// optional if the name is empty or the variable is unset.
std::optional<std::string> api_key_from_env(const std::string& env_name);

/// POSTs `body` to endpoint + path and returns the parsed JSON response.
/// Network errors, HTTP 429 and 5xx are retried per `policy`; 401/403 fail
/// immediately with ProviderError{auth_failure = true}; other statuses fail
/// immediately. Throws ProviderError.
nlohmann::json post_json(const Endpoint& endpoint, const std::string& path,
                         const nlohmann::json& body, const std::optional<std::string>& bearer,
                         const RetryPolicy& policy);

}  // namespace ragman::detail
