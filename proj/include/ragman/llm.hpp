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

// Chat-completion access: remote HTTP provider and a scripted test double.

#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ragman/retry.hpp"

namespace ragman::llm {

enum class Role { student, tutor };

std::string_view to_string(Role r);

struct ChatMessage {
  Role role = Role::student;
  std::string text;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string system_text;
  std::vector<ChatMessage> messages;
  double temperature = 0.2;
  int max_output_tokens = 700;

  /// Last message must come from the student; temperature in [0, 2];
  /// max_output_tokens > 0. Throws InvalidArgument.
  void validate() const;

  /// Text of the final (student) message.
  const std::string& latest_question() const;

  bool operator==(const ChatRequest&) const = default;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  /// Returns non-empty response text or throws ProviderError.
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Deterministic provider for tests. Each call first consumes the next
/// queued step, if any; otherwise the first rule whose pattern occurs in the
/// latest question answers; otherwise default_response. Every request is
/// recorded verbatim.
class ScriptedProvider final : public ChatProvider {
 public:
  struct Rule {
    std::string pattern;
    std::string response;
  };
  struct Step {
    std::string response;
    bool fail = false;  // throw ProviderError instead of answering
  };

  explicit ScriptedProvider(std::string default_response = "OK");

  ScriptedProvider& add_rule(std::string pattern, std::string response);
  ScriptedProvider& push_step(std::string response);
  ScriptedProvider& push_failure();

  std::string complete(const ChatRequest& request) override;

  std::vector<ChatRequest> call_log() const;
  std::size_t call_count() const;

 private:
  mutable std::mutex mu_;
  std::vector<Rule> rules_;
  std::deque<Step> steps_;
  std::string default_response_;
  std::vector<ChatRequest> log_;
};

struct RemoteChatConfig {
  std::string base_url;
  std::string model;
  std::string api_key_env;
  RetryPolicy retry;
};

/// POST {base_url}/chat/completions; student -> "user", tutor ->
/// "assistant", system_text -> "system". Returns the first choice's
/// message content. The API key is read from the environment per call and
/// never logged.
class RemoteChatProvider final : public ChatProvider {
 public:
  explicit RemoteChatProvider(RemoteChatConfig config);

  std::string complete(const ChatRequest& request) override;

 private:
  RemoteChatConfig config_;
};

/// Wraps validation and the empty-response check around any provider.
std::string complete(ChatProvider& provider, const ChatRequest& request);

}  // namespace ragman::llm
