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

#include <stdexcept>

#include <json.hpp>

#include "ragman/error.hpp"
#include "ragman/guardrail.hpp"
#include "ragman/rng.hpp"
#include "ragman/text.hpp"
#include "test_support.hpp"

namespace ragman::guardrail {
namespace {

TEST(IsCodeLikeLine, Rules) {
  EXPECT_TRUE(is_code_like_line("for x in xs:"));
  EXPECT_TRUE(is_code_like_line("int x;"));
  EXPECT_TRUE(is_code_like_line("    print(x)"));
  EXPECT_TRUE(is_code_like_line("def f"));
  EXPECT_TRUE(is_code_like_line("  return x"));
  EXPECT_TRUE(is_code_like_line("import os"));
  EXPECT_TRUE(is_code_like_line("x = 3"));
  EXPECT_TRUE(is_code_like_line("call f() now"));
  EXPECT_FALSE(is_code_like_line("Use the seek method to move the pointer."));
  EXPECT_FALSE(is_code_like_line("   indented prose (aside"));
  EXPECT_FALSE(is_code_like_line(""));
}

TEST(ContainsCode, Prose) {
  const auto d = contains_code("Use the seek method to move the pointer.");
  EXPECT_FALSE(d.flagged);
  EXPECT_EQ(d.score, 0.0);
  EXPECT_TRUE(d.reasons.empty());
}

TEST(ContainsCode, FencedBlock) {
  const auto d = contains_code("Look:\n```\nprint(1)\n```\nok");
  EXPECT_TRUE(d.flagged);
  EXPECT_TRUE(d.has(CodeReason::fenced_block));
}

TEST(ContainsCode, TenLinesSixCodeLike) {
  std::string text;
  for (int i = 0; i < 6; ++i) text += "value = " + std::to_string(i) + "\n";
  for (int i = 0; i < 4; ++i) text += "This line is plain prose number " + std::to_string(i) + "\n";
  const auto d = contains_code(text, 0.5);
  EXPECT_DOUBLE_EQ(d.score, 0.6);
  EXPECT_TRUE(d.flagged);
  EXPECT_TRUE(d.has(CodeReason::keyword_density));
  EXPECT_FALSE(contains_code(text, 0.7).flagged);
}

TEST(ContainsCode, LongInlineRunIsReportedOnly) {
  const std::string span(90, 'a');
  const auto d = contains_code("prose `" + span + "` prose");
  EXPECT_TRUE(d.has(CodeReason::inline_run));
  EXPECT_FALSE(d.flagged);
  EXPECT_FALSE(contains_code("prose `" + std::string(80, 'a') + "` prose").has(CodeReason::inline_run));
}

TEST(ContainsCode, TotalOnArbitraryBytes) {
  Xoshiro256StarStar rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::string s(rng.below(200), '\0');
    for (auto& c : s) c = static_cast<char>(rng.below(256));
    const auto a = contains_code(s);
    const auto b = contains_code(s);
    EXPECT_GE(a.score, 0.0);
    EXPECT_LE(a.score, 1.0);
    EXPECT_EQ(a.flagged, b.flagged);
    EXPECT_EQ(a.score, b.score);
  }
  EXPECT_FALSE(contains_code("\xD0\x9F\xD1\x80\xD0\xB8\xD0\xB2\xD0\xB5\xD1\x82").flagged);
  EXPECT_FALSE(contains_code("").flagged);
}

TEST(RedactCode, RemovesFencesAndCodeRuns) {
  const auto out = redact_code("Intro.\n```\nx = 1\n```\nMiddle prose.\nimport os\nx = 2\nEnd.");
  EXPECT_EQ(out.find("```"), std::string::npos);
  EXPECT_NE(out.find(kCodeRemovedMarker), std::string::npos);
  EXPECT_NE(out.find("Intro."), std::string::npos);
  EXPECT_NE(out.find("Middle prose."), std::string::npos);
  EXPECT_NE(out.find("End."), std::string::npos);
  for (auto line : text::split_lines(out)) EXPECT_FALSE(is_code_like_line(line)) << line;
}

TEST(RedactCode, UnterminatedFenceRunsToEnd) {
  const auto out = redact_code("Start.\n```python\ndef f():\n    pass\n");
  EXPECT_EQ(out.find("```"), std::string::npos);
  EXPECT_EQ(out.find("def"), std::string::npos);
  EXPECT_FALSE(contains_code(out).flagged);
}

TEST(EnforceNoCode, CleanCandidateUnchanged) {
  int calls = 0;
  const auto r = enforce_no_code("Think about the pointer position.", [&] {
    ++calls;
    return std::string("unused");
  });
  EXPECT_EQ(r.text, "Think about the pointer position.");
  EXPECT_EQ(calls, 0);
  EXPECT_FALSE(r.redacted);
}

TEST(EnforceNoCode, RegeneratesUntilClean) {
  const std::vector<std::string> script = {"```\nx = 1\n```", "Consider seek and tell as tools.\nUse them in order."};
  std::size_t calls = 0;
  const auto r = enforce_no_code("```\nprint(2)\n```", [&] { return script.at(calls++); }, 2);
  EXPECT_EQ(r.text, script[1]);
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(r.regenerations, 2);
  EXPECT_FALSE(r.redacted);
}

TEST(EnforceNoCode, AlwaysCodeIsRedacted) {
  int calls = 0;
  const auto r = enforce_no_code("```\nprint(1)\n```", [&] {
    ++calls;
    return std::string("Here:\n```\nprint(2)\n```");
  }, 1);
  EXPECT_EQ(calls, 1);
  EXPECT_TRUE(r.redacted);
  EXPECT_EQ(r.text.find("```"), std::string::npos);
  EXPECT_FALSE(contains_code(r.text).flagged);
}

TEST(EnforceNoCode, ZeroRetriesRedactsImmediately) {
  int calls = 0;
  const auto r = enforce_no_code("```\nx\n```", [&] {
    ++calls;
    return std::string();
  }, 0);
  EXPECT_EQ(calls, 0);
  EXPECT_TRUE(r.redacted);
  EXPECT_FALSE(contains_code(r.text).flagged);
}

TEST(EnforceNoCode, RegenerateFailureFallsThroughToRedaction) {
  int calls = 0;
  const auto r = enforce_no_code("Some prose.\n```\nx = 1\n```", [&]() -> std::string {
    ++calls;
    throw std::runtime_error("provider down");
  }, 2);
  EXPECT_EQ(calls, 1);
  EXPECT_TRUE(r.redacted);
  EXPECT_NE(r.text.find("Some prose."), std::string::npos);
  EXPECT_FALSE(contains_code(r.text).flagged);
}

TEST(EnforceNoCode, ValidatesArguments) {
  const Regenerate none = [] { return std::string(); };
  EXPECT_THROW(enforce_no_code("x", none, -1), InvalidArgument);
  EXPECT_THROW(enforce_no_code("x", none, 1, 0.0), InvalidArgument);
  EXPECT_THROW(enforce_no_code("x", none, 1, 1.5), InvalidArgument);
}

TEST(EnforceNoCode, RandomScriptsNeverLeakCode) {
  const std::vector<std::string> pool = {
      "```\nx = 1\n```", "def f():\n    return 1", "Plain advice.\nKeep going.", "a = b\nc = d\nprose",
      "Mixed.\n```py\nprint(1)", "Unicode \xE2\x80\x94 fine.\nStill prose."};
  Xoshiro256StarStar rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int retries = static_cast<int>(rng.below(4));
    int calls = 0;
    const auto r = enforce_no_code(pool[rng.below(pool.size())], [&] {
      ++calls;
      return pool[rng.below(pool.size())];
    }, retries);
    EXPECT_LE(calls, retries);
    EXPECT_EQ(r.text.find("```"), std::string::npos);
    EXPECT_FALSE(contains_code(r.text).flagged) << r.text;
  }
}

TEST(Calibration, PrecisionAndRecallOnLabeledFixture) {
  const auto content = ragman::testing::read_file(ragman::testing::fixture_dir() / "guardrail_calibration.jsonl");
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int total = 0;
  for (auto line : text::split_lines(content)) {
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const bool truth = j.at("has_code").get<bool>();
    const bool got = contains_code(j.at("text").get<std::string>(), kDefaultThreshold).flagged;
    ++total;
    tp += truth && got;
    fp += !truth && got;
    fn += truth && !got;
  }
  ASSERT_EQ(total, 40);
  const double precision = tp / static_cast<double>(tp + fp);
  const double recall = tp / static_cast<double>(tp + fn);
  EXPECT_GE(precision, 0.9) << "tp=" << tp << " fp=" << fp;
  EXPECT_GE(recall, 0.9) << "tp=" << tp << " fn=" << fn;
}

}  // namespace
}  // namespace ragman::guardrail
