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

#include "ragman/llm.hpp"

#include "http_client.hpp"
#include "ragman/error.hpp"
#include "ragman/text.hpp"

namespace ragman::llm {

std::string_view to_string(Role r) { return r == Role::student ? "student" : "tutor"; }

void ChatRequest::validate() const {
  if (messages.empty() || messages.back().role != Role::student) {
    throw InvalidArgument("chat request must end with a student message");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw InvalidArgument("temperature must be in [0, 2]");
  }
  if (max_output_tokens <= 0) throw InvalidArgument("max_output_tokens must be > 0");
}

const std::string& ChatRequest::latest_question() const {
  if (messages.empty()) throw InvalidArgument("chat request has no messages");
  return messages.back().text;
}

ScriptedProvider::ScriptedProvider(std::string default_response)
    : default_response_(std::move(default_response)) {}

ScriptedProvider& ScriptedProvider::add_rule(std::string pattern, std::string response) {
  std::lock_guard lock(mu_);
  rules_.push_back({std::move(pattern), std::move(response)});
  return *this;
}

ScriptedProvider& ScriptedProvider::push_step(std::string response) {
  std::lock_guard lock(mu_);
  steps_.push_back({std::move(response), false});
  return *this;
}

ScriptedProvider& ScriptedProvider::push_failure() {
  std::lock_guard lock(mu_);
  steps_.push_back({{}, true});
  return *this;
}

std::string ScriptedProvider::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  log_.push_back(request);
  if (!steps_.empty()) {
    Step step = std::move(steps_.front());
    steps_.pop_front();
    if (step.fail) throw ProviderError("scripted provider failure");
    return step.response;
  }
  const std::string& question = request.messages.empty() ? default_response_ : request.latest_question();
  for (const auto& rule : rules_) {
    if (text::contains(question, rule.pattern)) return rule.response;
  }
  return default_response_;
}

std::vector<ChatRequest> ScriptedProvider::call_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t ScriptedProvider::call_count() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

RemoteChatProvider::RemoteChatProvider(RemoteChatConfig config) : config_(std::move(config)) {
  if (config_.model.empty()) throw InvalidArgument("remote chat provider requires a model");
  detail::parse_base_url(config_.base_url);
}

std::string RemoteChatProvider::complete(const ChatRequest& request) {
  request.validate();
  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_text}});
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role == Role::student ? "user" : "assistant"}, {"content", m.text}});
  }
  const nlohmann::json body = {{"model", config_.model},
                               {"messages", messages},
                               {"temperature", request.temperature},
                               {"max_tokens", request.max_output_tokens}};
  const auto resp = detail::post_json(detail::parse_base_url(config_.base_url), "/chat/completions",
                                      body, detail::api_key_from_env(config_.api_key_env),
                                      config_.retry);
  try {
    const auto& content = resp.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProviderError("chat response content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("malformed chat response: ") + e.what());
  }
}

std::string complete(ChatProvider& provider, const ChatRequest& request) {
  request.validate();
  std::string out = provider.complete(request);
  if (text::trim(out).empty()) throw ProviderError("provider returned an empty response");
  return out;
}

}  // namespace ragman::llm
