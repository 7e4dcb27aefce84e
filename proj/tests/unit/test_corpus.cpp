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

#include <gtest/gtest.h>

#include "ragman/corpus.hpp"
#include "ragman/error.hpp"
#include "ragman/rng.hpp"
#include "ragman/text.hpp"
#include "test_support.hpp"

namespace ragman::corpus {
namespace {

using ragman::testing::TempDir;
using ragman::testing::fixture_dir;
using ragman::testing::write_file;

std::vector<std::string> read_names(const std::filesystem::path& p) {
  std::vector<std::string> out;
  const auto content = ragman::testing::read_file(p);
  for (auto line : text::split_lines(content)) {
    if (!text::trim(line).empty()) out.emplace_back(text::trim(line));
  }
  return out;
}

TEST(LoadCorpus, ParsesValidRecords) {
  const auto r = parse_corpus(
      R"({"id":"a","source":"wp_description","wp_tag":"WP1","title":"T","body":"hello world"})"
      "\n\n"
      R"({"id":"b","source":"discussion_post","body":"post"})"
      "\n");
  ASSERT_EQ(r.documents.size(), 2u);
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_EQ(r.documents[0].source, Source::wp_description);
  EXPECT_EQ(r.documents[0].wp_tag, "WP1");
  EXPECT_FALSE(r.documents[1].wp_tag.has_value());
}

TEST(LoadCorpus, MissingBodyIsReportedWithLineNumber) {
  const auto r = parse_corpus(
      R"({"id":"a","source":"discussion_post","body":"ok"})"
      "\n"
      R"({"id":"b","source":"discussion_post"})"
      "\n");
  ASSERT_EQ(r.documents.size(), 1u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].line, 2u);
}

TEST(LoadCorpus, DuplicateIdsAndBadJsonAreDiagnosed) {
  const auto r = parse_corpus(
      R"({"id":"a","source":"discussion_post","body":"x"})"
      "\n"
      R"({"id":"a","source":"discussion_post","body":"y"})"
      "\n"
      "{not json\n"
      R"({"id":"c","source":"blog","body":"z"})"
      "\n");
  EXPECT_EQ(r.documents.size(), 1u);
  EXPECT_EQ(r.diagnostics.size(), 3u);
}

TEST(LoadCorpus, MissingFileThrows) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), IoError);
}

TEST(ScrubPii, EmailExample) {
  EXPECT_EQ(scrub_text("email me at a@b.edu", {}), "email me at [REDACTED]");
}

TEST(ScrubPii, StudentIdsOnlyExactEightDigits) {
  EXPECT_EQ(scrub_text("id 12345678.", {}), "id [REDACTED].");
  EXPECT_EQ(scrub_text("num 123456789 and 1234567", {}), "num 123456789 and 1234567");
  EXPECT_EQ(scrub_text("x12345678", {}), "x12345678");
}

TEST(ScrubPii, NamesWholeWordCaseInsensitive) {
  ScrubRules rules{{"Ted"}};
  EXPECT_EQ(scrub_text("ask ted, or TED. Tedious stays", rules), "ask [REDACTED], or [REDACTED]. Tedious stays");
}

TEST(ScrubPii, HandScrubbedFixture) {
  const ScrubRules rules{read_names(fixture_dir() / "scrub_names.txt")};
  const auto input = load_corpus(fixture_dir() / "scrub_input.jsonl");
  const auto expected = load_corpus(fixture_dir() / "scrub_expected.jsonl");
  ASSERT_TRUE(input.diagnostics.empty());
  ASSERT_EQ(input.documents.size(), expected.documents.size());
  for (std::size_t i = 0; i < input.documents.size(); ++i) {
    EXPECT_EQ(scrub_pii(input.documents[i], rules), expected.documents[i]) << input.documents[i].id;
  }
}

TEST(ScrubPii, Idempotent) {
  const ScrubRules rules{{"Maria", "Redacted", "Lopez"}};
  const std::vector<std::string> samples = {
      "Maria Lopez maria@x.org 12345678", "[REDACTED] redacted [REDACTED]x", "plain text", "a@b.co a@b.co",
      "Lopez-Maria 00000000/11111111"};
  for (const auto& s : samples) {
    const auto once = scrub_text(s, rules);
    EXPECT_EQ(scrub_text(once, rules), once) << s;
  }
}

TEST(FilterByTag, ExactMatchOnly) {
  DocumentSet set = {{"a", Source::wp_description, "WP1", "", "x"},
                     {"b", Source::discussion_post, "WP2", "", "y"},
                     {"c", Source::discussion_post, std::nullopt, "", "z"},
                     {"d", Source::discussion_post, "WP1", "", "w"}};
  const auto wp1 = filter_by_tag(set, "WP1");
  ASSERT_EQ(wp1.size(), 2u);
  EXPECT_EQ(wp1[0].id, "a");
  EXPECT_EQ(wp1[1].id, "d");
  EXPECT_TRUE(filter_by_tag(set, "wp1").empty());
}

Document doc_with_tokens(std::size_t n) {
  Document d;
  d.id = "doc";
  for (std::size_t i = 0; i < n; ++i) d.body += (i ? " " : "") + std::string("t") + std::to_string(i);
  return d;
}

TEST(Chunking, ShortDocumentIsOneChunk) {
  const auto chunks = chunk_document(doc_with_tokens(10), 400, 40);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].chunk_id, "doc#0");
  EXPECT_EQ(chunks[0].text, doc_with_tokens(10).body);
}

TEST(Chunking, KeepsOriginalWhitespaceInsideChunk) {
  Document d{"x", Source::discussion_post, std::nullopt, "", "  a\tb\n\nc  "};
  const auto chunks = chunk_document(d, 400, 40);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].text, "a\tb\n\nc");
}

TEST(Chunking, RejectsInvalidParameters) {
  EXPECT_THROW(chunk_document(doc_with_tokens(5), 10, 10), InvalidArgument);
  EXPECT_THROW(chunk_document(doc_with_tokens(5), 0, 0), InvalidArgument);
  Document empty{"e", Source::discussion_post, std::nullopt, "", "   "};
  EXPECT_THROW(chunk_document(empty, 10, 2), InvalidArgument);
}

// Coverage and exact overlap for random (length, max, overlap).
TEST(Chunking, CoverageAndOverlapProperty) {
  Xoshiro256StarStar rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    const std::size_t max = 1 + rng.below(50);
    const std::size_t overlap = rng.below(max);
    const auto chunks = chunk_document(doc_with_tokens(n), max, overlap);
    ASSERT_FALSE(chunks.empty());
    EXPECT_EQ(chunks.front().token_begin, 0u);
    EXPECT_EQ(chunks.back().token_end, n);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const auto& c = chunks[i];
      EXPECT_LE(c.token_end - c.token_begin, max);
      EXPECT_EQ(text::split_whitespace(c.text).size(), c.token_end - c.token_begin);
      EXPECT_EQ(c.ordinal, i);
      if (i > 0) {
        EXPECT_EQ(chunks[i - 1].token_end - c.token_begin, overlap)
            << "n=" << n << " max=" << max << " overlap=" << overlap;
      }
    }
  }
}

TEST(Chunking, FileRoundTrip) {
  TempDir dir;
  Document d = doc_with_tokens(25);
  d.wp_tag = "WP3";
  const auto chunks = chunk_document(d, 10, 3);
  write_chunks(dir / "chunks.jsonl", chunks);
  EXPECT_EQ(read_chunks(dir / "chunks.jsonl"), chunks);
}

TEST(Chunking, ReadChunksRejectsMalformedLine) {
  TempDir dir;
  write_file(dir / "bad.jsonl", "{\"chunk_id\":\"x\"}\n");
  EXPECT_THROW(read_chunks(dir / "bad.jsonl"), ParseError);
}

}  // namespace
}  // namespace ragman::corpus
