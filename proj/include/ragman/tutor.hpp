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

// Tutor configuration, six-part prompt assembly and the per-message
// retrieve -> prompt -> complete -> guardrail flow.
//
// The system text carries parts 1, 2, 3, 4 and 6, each introduced by a line
// "### PART n: <name>". Part 5, the conversation so far ending with the new
// question, is carried as structured chat messages.

#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragman/embedding.hpp"
#include "ragman/guardrail.hpp"
#include "ragman/llm.hpp"
#include "ragman/vectorstore.hpp"

namespace ragman::tutor {

using Clock = std::chrono::system_clock;

enum class Scope { in, out };
enum class Quality { good, bad };

std::string_view to_string(Scope s);
std::string_view to_string(Quality q);
Scope scope_from_string(std::string_view s);
Quality quality_from_string(std::string_view s);

struct PairLabels {
  Scope scope = Scope::in;
  Quality quality = Quality::good;

  bool operator==(const PairLabels&) const = default;
};

struct MessagePair {
  std::string question;
  std::string response;
  std::vector<std::string> retrieved_chunk_ids;
  Clock::time_point timestamp{};
  std::optional<PairLabels> labels;
  /// Set when the tutor could not answer; `response` then holds the
  /// user-facing unavailability notice.
  std::optional<std::string> error_marker;
};

struct Conversation {
  std::string conversation_id;
  std::string tutor_id;
  std::vector<MessagePair> pairs;
  Clock::time_point created_at{};
};

struct KnowledgeBaseRef {
  std::string label;  // e.g. "WP description", "discussion post"
  std::filesystem::path index_path;
};

inline constexpr std::string_view kDefaultResponseInstructions =
    "Never write solution code or code snippets for the student, not even partial ones. "
    "Explain the relevant concepts and guide the student step by step with small nudges "
    "toward their own solution. If you lack context about the assignment, say so honestly. "
    "Politely decline requests unrelated to the course or to programming. "
    "End every answer with a question that checks the student's understanding.";

inline constexpr std::string_view kTutorUnavailable =
    "The tutor is unavailable right now. Please try again in a moment.";

struct TutorConfig {
  std::string tutor_id;
  std::string display_name;
  std::string role_text;
  std::string goal_text;
  std::string assignment_spec;
  std::string response_instructions{kDefaultResponseInstructions};
  std::vector<KnowledgeBaseRef> knowledge_bases;
  std::size_t k_per_db = 3;
  std::size_t history_budget_pairs = 8;
  double guardrail_threshold = guardrail::kDefaultThreshold;
  int guardrail_max_retries = guardrail::kDefaultMaxRetries;
  double temperature = 0.2;
  int max_output_tokens = 700;

  /// Non-empty prompt sources free of part delimiters, 1-2 knowledge
  /// bases, k_per_db >= 1, sane guardrail and sampling settings. Throws
  /// InvalidArgument.
  void validate() const;
};

/// Reads one tutor JSON document; relative index paths resolve against the
/// file's directory. Throws IoError, ParseError, InvalidArgument.
TutorConfig load_tutor_config(const std::filesystem::path& path);

/// Every *.json in `dir`, in filename order.
std::vector<TutorConfig> load_tutor_configs(const std::filesystem::path& dir);

struct KnowledgeBase {
  std::string label;
  std::shared_ptr<const vectorstore::VectorIndex> index;
};

/// A configured tutor with its indexes loaded.
struct Tutor {
  TutorConfig config;
  std::vector<KnowledgeBase> knowledge_bases;
};

/// Loads the configured indexes and checks each was built by a provider
/// with the same fingerprint as `embedder`. Throws CorruptionError,
/// IoError, InvalidArgument.
Tutor load_tutor(TutorConfig config, const embedding::EmbeddingProvider& embedder);

struct RetrievedText {
  std::string kb_label;
  vectorstore::RetrievalResult hit;
};

/// Delimiter line for part n.
std::string part_header(int part);

/// The most recent budget_pairs pairs, order preserved.
std::vector<MessagePair> truncate_history(std::span<const MessagePair> history,
                                          std::size_t budget_pairs);

/// Builds the chat request. Retrieved texts appear in part 4 in score
/// order, each prefixed by "[<kb label>]"; history is truncated to the
/// config's budget. Throws InvalidArgument on an empty question.
llm::ChatRequest assemble_prompt(const TutorConfig& cfg, std::span<const RetrievedText> retrieved,
                                 std::span<const MessagePair> history, std::string_view question);

/// Answers one student message: embeds the question, takes k_per_db hits
/// from each knowledge base, assembles the prompt, completes it and applies
/// the no-code guardrail. The pair is appended to `session` and returned.
/// Provider failures yield a pair with kTutorUnavailable and an
/// error_marker. Throws InvalidArgument on an empty question.
MessagePair handle_message(const Tutor& tutor, Conversation& session, std::string_view question,
                           const embedding::EmbeddingProvider& embedder, llm::ChatProvider& llm);

}  // namespace ragman::tutor
