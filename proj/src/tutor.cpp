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

#include "ragman/tutor.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ragman/error.hpp"
#include "ragman/text.hpp"

namespace ragman::tutor {
namespace {

using nlohmann::json;

constexpr std::string_view kPartPrefix = "### PART ";
constexpr std::string_view kNoContext = "(no retrieved context)";

std::string_view part_name(int part) {
  switch (part) {
    case 1:
      return "Role";
    case 2:
      return "Assignment Goal";
    case 3:
      return "Assignment Specification";
    case 4:
      return "Retrieved Context";
    case 5:
      return "Conversation";
    case 6:
      return "Response Instructions";
    default:
      throw InvalidArgument("no prompt part " + std::to_string(part));
  }
}

bool has_delimiter_line(std::string_view s) {
  for (auto line : text::split_lines(s)) {
    if (line.substr(0, kPartPrefix.size()) == kPartPrefix) return true;
  }
  return false;
}

// Retrieved texts come from the corpus; quote any line that would read as a
// part delimiter.
std::string neutralize_delimiters(std::string_view s) {
  std::string out;
  bool first = true;
  for (auto line : text::split_lines(s)) {
    if (!first) out += '\n';
    first = false;
    if (line.substr(0, kPartPrefix.size()) == kPartPrefix) out += "> ";
    out.append(line);
  }
  return out;
}

void require_text(const std::string& value, const char* name) {
  if (text::trim(value).empty()) throw InvalidArgument(std::string("tutor config: empty ") + name);
  if (has_delimiter_line(value)) {
    throw InvalidArgument(std::string("tutor config: ") + name + " contains a part delimiter line");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace

std::string_view to_string(Scope s) { return s == Scope::in ? "in" : "out"; }
std::string_view to_string(Quality q) { return q == Quality::good ? "good" : "bad"; }

Scope scope_from_string(std::string_view s) {
  if (s == "in") return Scope::in;
  if (s == "out") return Scope::out;
  throw ParseError("unknown scope label '" + std::string(s) + "'");
}

Quality quality_from_string(std::string_view s) {
  if (s == "good") return Quality::good;
  if (s == "bad") return Quality::bad;
  throw ParseError("unknown quality label '" + std::string(s) + "'");
}

void TutorConfig::validate() const {
  if (text::trim(tutor_id).empty()) throw InvalidArgument("tutor config: empty tutor_id");
  require_text(role_text, "role_text");
  require_text(goal_text, "goal_text");
  require_text(assignment_spec, "assignment_spec");
  require_text(response_instructions, "response_instructions");
  if (knowledge_bases.empty() || knowledge_bases.size() > 2) {
    throw InvalidArgument("tutor config: expected 1 or 2 knowledge bases");
  }
  for (const auto& kb : knowledge_bases) {
    if (text::trim(kb.label).empty()) throw InvalidArgument("tutor config: knowledge base without label");
  }
  if (k_per_db < 1) throw InvalidArgument("tutor config: k_per_db must be >= 1");
  if (!(guardrail_threshold > 0.0 && guardrail_threshold <= 1.0)) {
    throw InvalidArgument("tutor config: guardrail threshold must be in (0, 1]");
  }
  if (guardrail_max_retries < 0) throw InvalidArgument("tutor config: max_retries must be >= 0");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw InvalidArgument("tutor config: temperature must be in [0, 2]");
  }
  if (max_output_tokens <= 0) throw InvalidArgument("tutor config: max_output_tokens must be > 0");
}

TutorConfig load_tutor_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  TutorConfig cfg;
  try {
    cfg.tutor_id = j.at("tutor_id").get<std::string>();
    cfg.display_name = get_or<std::string>(j, "display_name", cfg.tutor_id);
    cfg.role_text = j.at("role_text").get<std::string>();
    cfg.goal_text = j.at("goal_text").get<std::string>();
    cfg.assignment_spec = j.at("assignment_spec").get<std::string>();
    cfg.response_instructions =
        get_or<std::string>(j, "response_instructions", std::string(kDefaultResponseInstructions));
    for (const auto& kb : j.at("knowledge_bases")) {
      std::filesystem::path p = kb.at("index").get<std::string>();
      if (p.is_relative()) p = path.parent_path() / p;
      cfg.knowledge_bases.push_back({kb.at("label").get<std::string>(), p.lexically_normal()});
    }
    cfg.k_per_db = get_or<std::size_t>(j, "k_per_db", cfg.k_per_db);
    cfg.history_budget_pairs = get_or<std::size_t>(j, "history_budget_pairs", cfg.history_budget_pairs);
    if (auto g = j.find("guardrail"); g != j.end()) {
      cfg.guardrail_threshold = get_or<double>(*g, "threshold", cfg.guardrail_threshold);
      cfg.guardrail_max_retries = get_or<int>(*g, "max_retries", cfg.guardrail_max_retries);
    }
    cfg.temperature = get_or<double>(j, "temperature", cfg.temperature);
    cfg.max_output_tokens = get_or<int>(j, "max_output_tokens", cfg.max_output_tokens);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<TutorConfig> load_tutor_configs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TutorConfig> out;
  for (const auto& f : files) out.push_back(load_tutor_config(f));
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (out[i].tutor_id == out[j].tutor_id) {
        throw InvalidArgument("duplicate tutor_id '" + out[i].tutor_id + "'");
      }
    }
  }
  return out;
}

Tutor load_tutor(TutorConfig config, const embedding::EmbeddingProvider& embedder) {
  config.validate();
  Tutor t;
  for (const auto& ref : config.knowledge_bases) {
    auto index = std::make_shared<const vectorstore::VectorIndex>(vectorstore::load_index(ref.index_path));
    if (index->provider_fingerprint() != embedder.fingerprint()) {
      throw InvalidArgument("index " + ref.index_path.string() + " was built with '" +
                            index->provider_fingerprint() + "' but the service embeds with '" +
                            embedder.fingerprint() + "'");
    }
    t.knowledge_bases.push_back({ref.label, std::move(index)});
  }
  t.config = std::move(config);
  return t;
}

std::string part_header(int part) {
  return std::string(kPartPrefix) + std::to_string(part) + ": " + std::string(part_name(part));
}

std::vector<MessagePair> truncate_history(std::span<const MessagePair> history,
                                          std::size_t budget_pairs) {
  const std::size_t keep = std::min(budget_pairs, history.size());
  return {history.end() - static_cast<std::ptrdiff_t>(keep), history.end()};
}

llm::ChatRequest assemble_prompt(const TutorConfig& cfg, std::span<const RetrievedText> retrieved,
                                 std::span<const MessagePair> history, std::string_view question) {
  if (text::trim(question).empty()) throw InvalidArgument("question must not be empty");

  std::vector<const RetrievedText*> ordered;
  ordered.reserve(retrieved.size());
  for (const auto& r : retrieved) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(), [](const RetrievedText* a, const RetrievedText* b) {
    if (a->hit.score != b->hit.score) return a->hit.score > b->hit.score;
    return a->hit.chunk_id < b->hit.chunk_id;
  });

  std::ostringstream sys;
  sys << part_header(1) << '\n' << cfg.role_text << "\n\n";
  sys << part_header(2) << '\n' << cfg.goal_text << "\n\n";
  sys << part_header(3) << '\n' << cfg.assignment_spec << "\n\n";
  sys << part_header(4) << '\n';
  if (ordered.empty()) {
    sys << kNoContext << '\n';
  } else {
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      if (i) sys << '\n';
      sys << '[' << ordered[i]->kb_label << "] " << neutralize_delimiters(ordered[i]->hit.text) << '\n';
    }
  }
  sys << '\n' << part_header(6) << '\n' << cfg.response_instructions;

  llm::ChatRequest req;
  req.system_text = sys.str();
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_output_tokens;
  for (const auto& pair : truncate_history(history, cfg.history_budget_pairs)) {
    req.messages.push_back({llm::Role::student, pair.question});
    req.messages.push_back({llm::Role::tutor, pair.response});
  }
  req.messages.push_back({llm::Role::student, std::string(question)});
  return req;
}

MessagePair handle_message(const Tutor& tutor, Conversation& session, std::string_view question,
                           const embedding::EmbeddingProvider& embedder, llm::ChatProvider& llm) {
  if (text::trim(question).empty()) throw InvalidArgument("question must not be empty");
  const TutorConfig& cfg = tutor.config;

  MessagePair pair;
  pair.question = std::string(question);

  try {
    std::vector<RetrievedText> retrieved;
    std::optional<embedding::EmbeddingVector> query;
    try {
      query = std::move(embedding::embed_texts(embedder, std::vector<std::string>{pair.question}).front());
    } catch (const InvalidArgument&) {
      // Nothing to look up (e.g. punctuation only); answer without context.
    }
    if (query) {
      for (const auto& kb : tutor.knowledge_bases) {
        for (auto& hit : kb.index->search(*query, cfg.k_per_db)) {
          pair.retrieved_chunk_ids.push_back(hit.chunk_id);
          retrieved.push_back({kb.label, std::move(hit)});
        }
      }
    }

    // Failed turns are kept in the session for logging but not replayed.
    std::vector<MessagePair> answered;
    for (const auto& p : session.pairs) {
      if (!p.error_marker) answered.push_back(p);
    }
    const auto request = assemble_prompt(cfg, retrieved, answered, pair.question);
    std::string first = llm::complete(llm, request);

    auto regenerate = [&]() {
      llm::ChatRequest retry = request;
      retry.system_text += "\n\n";
      retry.system_text += guardrail::kRegenerationInstruction;
      return llm::complete(llm, retry);
    };
    auto outcome = guardrail::enforce_no_code(std::move(first), regenerate, cfg.guardrail_max_retries,
                                              cfg.guardrail_threshold);
    pair.response = std::move(outcome.text);
  } catch (const ProviderError& e) {
    pair.response = std::string(kTutorUnavailable);
    pair.error_marker = e.what();
  }

  pair.timestamp = Clock::now();
  session.pairs.push_back(pair);
  return pair;
}

}  // namespace ragman::tutor
