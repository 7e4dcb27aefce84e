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

// Knowledge-source ingestion: loading, PII scrubbing, tag filtering and
// chunking of assignment descriptions and discussion posts.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ragman::corpus {

enum class Source { wp_description, discussion_post };

std::string_view to_string(Source s);
/// Throws ParseError on an unknown name.
Source source_from_string(std::string_view s);

struct Document {
  std::string id;
  Source source = Source::discussion_post;
  std::optional<std::string> wp_tag;
  std::string title;
  std::string body;

  bool operator==(const Document&) const = default;
};

using DocumentSet = std::vector<Document>;

struct LineDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  DocumentSet documents;
  std::vector<LineDiagnostic> diagnostics;
};

/// Parses a JSON-lines corpus file. Malformed records are skipped and
/// reported; blank lines are ignored. Throws IoError if the file cannot be
/// read.
LoadResult load_corpus(const std::filesystem::path& path);

/// Same as load_corpus, over in-memory content.
LoadResult parse_corpus(std::string_view content);

struct ScrubRules {
  /// Whole-word, case-insensitive names to redact.
  std::vector<std::string> names;
};

inline constexpr std::string_view kRedacted = "[REDACTED]";

/// Replaces e-mail addresses, 8-digit ID-like numbers and listed names in
/// the title and body with kRedacted. Idempotent.
Document scrub_pii(const Document& doc, const ScrubRules& rules);
std::string scrub_text(std::string_view text, const ScrubRules& rules);

DocumentSet filter_by_tag(const DocumentSet& set, std::string_view tag);

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  Source source = Source::discussion_post;
  std::optional<std::string> wp_tag;
  std::string text;
  std::size_t ordinal = 0;
  // Token span [token_begin, token_end) within the parent body.
  std::size_t token_begin = 0;
  std::size_t token_end = 0;

  bool operator==(const Chunk&) const = default;
};

struct ChunkingOptions {
  std::size_t max_units = 400;
  std::size_t overlap_units = 40;
};

/// Splits a document into windows of at most max_units whitespace tokens,
/// consecutive windows sharing overlap_units tokens. Each chunk's text is
/// the verbatim body slice from its first to its last token. Throws
/// InvalidArgument unless 0 <= overlap < max, or if the body has no tokens.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_units,
                                  std::size_t overlap_units);

/// Chunk files are JSON lines with the Chunk fields.
void write_chunks(const std::filesystem::path& path, const std::vector<Chunk>& chunks);
std::vector<Chunk> read_chunks(const std::filesystem::path& path);

}  // namespace ragman::corpus
