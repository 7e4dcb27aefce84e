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

#include "ragman/corpus.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ragman/error.hpp"
#include "ragman/text.hpp"

namespace ragman::corpus {
namespace {

using nlohmann::json;

bool is_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

std::string required_string(const json& rec, const char* field) {
  auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) {
    throw ParseError(std::string("missing required field '") + field + "'");
  }
  if (!it->is_string()) throw ParseError(std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

Document parse_record(std::string_view line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!rec.is_object()) throw ParseError("record is not an object");

  Document doc;
  doc.id = required_string(rec, "id");
  if (doc.id.empty()) throw ParseError("empty id");
  doc.source = source_from_string(required_string(rec, "source"));
  doc.body = required_string(rec, "body");
  if (text::trim(doc.body).empty()) throw ParseError("empty body");
  if (auto it = rec.find("title"); it != rec.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("field 'title' must be a string");
    doc.title = it->get<std::string>();
  }
  if (auto it = rec.find("wp_tag"); it != rec.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("field 'wp_tag' must be a string");
    doc.wp_tag = it->get<std::string>();
  }
  return doc;
}

// Replaces every maximal run of exactly eight digits that is not adjacent to
// another alphanumeric.
std::string redact_student_ids(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      out += s[i++];
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    bool bounded = (i == 0 || !is_alnum(s[i - 1])) && (j == s.size() || !is_alnum(s[j]));
    if (j - i == 8 && bounded) {
      out += kRedacted;
    } else {
      out.append(s.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

// True if [b, e) overlaps an existing redaction token.
bool inside_redaction(std::string_view s, std::size_t b, std::size_t e) {
  std::size_t from = b >= kRedacted.size() ? b - kRedacted.size() + 1 : 0;
  for (auto pos = s.find(kRedacted, from); pos != std::string_view::npos && pos < e;
       pos = s.find(kRedacted, pos + 1)) {
    if (pos + kRedacted.size() > b) return true;
  }
  return false;
}

std::string redact_name(std::string_view s, std::string_view name) {
  const std::string lowered = text::to_lower_ascii(s);
  const std::string needle = text::to_lower_ascii(name);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto hit = lowered.find(needle, pos);
    if (hit == std::string::npos) break;
    std::size_t end = hit + needle.size();
    bool bounded = (hit == 0 || !is_alnum(lowered[hit - 1])) &&
                   (end == lowered.size() || !is_alnum(lowered[end]));
    if (!bounded || inside_redaction(s, hit, end)) {
      out.append(s.substr(pos, hit + 1 - pos));
      pos = hit + 1;
      continue;
    }
    out.append(s.substr(pos, hit - pos));
    out += kRedacted;
    pos = end;
  }
  out.append(s.substr(pos));
  return out;
}

const std::regex& email_pattern() {
  static const std::regex re(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})");
  return re;
}

json chunk_to_json(const Chunk& c) {
  json j = {{"chunk_id", c.chunk_id},   {"doc_id", c.doc_id},
            {"source", to_string(c.source)}, {"ordinal", c.ordinal},
            {"token_begin", c.token_begin},  {"token_end", c.token_end},
            {"text", c.text}};
  j["wp_tag"] = c.wp_tag ? json(*c.wp_tag) : json(nullptr);
  return j;
}

}  // namespace

std::string_view to_string(Source s) {
  return s == Source::wp_description ? "wp_description" : "discussion_post";
}

Source source_from_string(std::string_view s) {
  if (s == "wp_description") return Source::wp_description;
  if (s == "discussion_post") return Source::discussion_post;
  throw ParseError("unknown source '" + std::string(s) + "'");
}

LoadResult parse_corpus(std::string_view content) {
  LoadResult result;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      Document doc = parse_record(line);
      if (!seen.insert(doc.id).second) throw ParseError("duplicate id '" + doc.id + "'");
      result.documents.push_back(std::move(doc));
    } catch (const ParseError& e) {
      result.diagnostics.push_back({line_no, e.what()});
    }
  }
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

std::string scrub_text(std::string_view input, const ScrubRules& rules) {
  std::string s = std::regex_replace(std::string(input), email_pattern(), std::string(kRedacted));
  s = redact_student_ids(s);
  for (const auto& name : rules.names) {
    auto trimmed = text::trim(name);
    if (!trimmed.empty()) s = redact_name(s, trimmed);
  }
  return s;
}

Document scrub_pii(const Document& doc, const ScrubRules& rules) {
  Document out = doc;
  out.title = scrub_text(doc.title, rules);
  out.body = scrub_text(doc.body, rules);
  return out;
}

DocumentSet filter_by_tag(const DocumentSet& set, std::string_view tag) {
  DocumentSet out;
  for (const auto& d : set) {
    if (d.wp_tag && *d.wp_tag == tag) out.push_back(d);
  }
  return out;
}

std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_units,
                                  std::size_t overlap_units) {
  if (max_units == 0 || overlap_units >= max_units) {
    throw InvalidArgument("chunking requires 0 <= overlap < max");
  }
  const std::string_view body = doc.body;
  const auto tokens = text::split_whitespace(body);
  if (tokens.empty()) throw InvalidArgument("document '" + doc.id + "' has an empty body");

  auto slice = [&](std::size_t b, std::size_t e) {
    const char* first = tokens[b].data();
    const char* last = tokens[e - 1].data() + tokens[e - 1].size();
    return std::string(first, static_cast<std::size_t>(last - first));
  };

  std::vector<Chunk> chunks;
  std::size_t start = 0;
  while (true) {
    std::size_t end = std::min(start + max_units, tokens.size());
    Chunk c;
    c.ordinal = chunks.size();
    c.chunk_id = doc.id + "#" + std::to_string(c.ordinal);
    c.doc_id = doc.id;
    c.source = doc.source;
    c.wp_tag = doc.wp_tag;
    c.text = slice(start, end);
    c.token_begin = start;
    c.token_end = end;
    chunks.push_back(std::move(c));
    if (end == tokens.size()) break;
    start = end - overlap_units;
  }
  return chunks;
}

void write_chunks(const std::filesystem::path& path, const std::vector<Chunk>& chunks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& c : chunks) out << chunk_to_json(c).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Chunk> read_chunks(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<Chunk> chunks;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      Chunk c;
      c.chunk_id = j.at("chunk_id").get<std::string>();
      c.doc_id = j.at("doc_id").get<std::string>();
      c.source = source_from_string(j.at("source").get<std::string>());
      c.text = j.at("text").get<std::string>();
      c.ordinal = j.value("ordinal", std::size_t{0});
      c.token_begin = j.value("token_begin", std::size_t{0});
      c.token_end = j.value("token_end", std::size_t{0});
      if (auto it = j.find("wp_tag"); it != j.end() && it->is_string()) {
        c.wp_tag = it->get<std::string>();
      }
      chunks.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return chunks;
}

}  // namespace ragman::corpus
