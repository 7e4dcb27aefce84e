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

#include <sstream>

#include <json.hpp>

#include "ragman/chat_log.hpp"
#include "ragman/cli.hpp"
#include "ragman/vectorstore.hpp"
#include "test_support.hpp"

namespace ragman::cli {
namespace {

using nlohmann::json;
using ragman::testing::TempDir;
using ragman::testing::data_dir;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ragman");
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string grade_file(const char* name) { return (data_dir() / "grades" / name).string(); }

TEST(Cli, HelpForEverySubcommand) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  for (const auto* sub : {"ingest", "build-index", "serve", "clean", "sample-plan", "label-stats", "grade-test"}) {
    const auto r = run_cli({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
  }
}

TEST(Cli, BadInvocations) {
  EXPECT_NE(run_cli({}).code, 0);
  EXPECT_NE(run_cli({"frobnicate"}).code, 0);
  EXPECT_NE(run_cli({"grade-test", "--a", grade_file("table1_2023.json")}).code, 0);
  EXPECT_NE(run_cli({"grade-test", "--a", "/nonexistent", "--b", "/nonexistent"}).code, 0);
  const auto bad_letter = run_cli({"grade-test", "--a", grade_file("table1_2023.json"), "--b",
                                   grade_file("table1_2024.json"), "--max-letter", "Q", "--resamples", "10"});
  EXPECT_EQ(bad_letter.code, 1);
  EXPECT_NE(bad_letter.err.find("error:"), std::string::npos);
}

TEST(Cli, SamplePlanReproducesPublishedAllocation) {
  const auto r = run_cli({"sample-plan", "--counts", "219,210,112,62,68", "--total", "248"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["allocation"], json::array({81, 78, 41, 23, 25}));
  EXPECT_EQ(j["population"], 671);
  EXPECT_EQ(j["formula_sample_size"], 245);
  EXPECT_EQ(j["total_overridden"], true);
  EXPECT_TRUE(j.contains("note"));
}

TEST(Cli, SamplePlanDefaultsToFormulaSize) {
  const auto r = run_cli({"sample-plan", "--counts", "219,210,112,62,68"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["total"], 245);
  EXPECT_EQ(j["total_overridden"], false);
}

TEST(Cli, CleanRemovesRepeatedQuestions) {
  TempDir dir;
  {
    chat::LogWriter w(dir / "log.jsonl");
    for (std::size_t i = 0; i < 6; ++i) {
      chat::LogRecord r;
      r.conversation_id = "c" + std::to_string(i);
      r.tutor_id = "WP1";
      r.timestamp = "2024-01-09T17:03:12.000000Z";
      r.question = i < 4 ? "same question" : "unique " + std::to_string(i);
      r.response = "resp";
      w.append(r);
    }
  }
  const auto r = run_cli({"clean", "--log", (dir / "log.jsonl").string(), "--out", (dir / "clean.jsonl").string(),
                          "--blocklist", (data_dir() / "blocklist.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["pairs_in"], 6);
  EXPECT_EQ(j["pairs_removed_dup"], 4);
  EXPECT_EQ(j["pairs_out"], 2);
  EXPECT_EQ(chat::read_log(dir / "clean.jsonl").records.size(), 2u);
}

TEST(Cli, GradeTestReportIsReproducible) {
  const std::vector<std::string> args = {"grade-test", "--a", grade_file("table1_2023.json"), "--b",
                                         grade_file("table1_2024.json"), "--seed", "7", "--resamples", "200"};
  const auto a = run_cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  const auto j = json::parse(a.out);
  EXPECT_TRUE(j.contains("mode_p"));
  EXPECT_EQ(j["variant"], "full");
  EXPECT_EQ(j["config"]["seed"], 7);
  EXPECT_EQ(j["config"]["resamples"], 200);
  EXPECT_TRUE(j["observed"].contains("ks"));
  EXPECT_EQ(run_cli(args).out, a.out);
}

TEST(Cli, GradeTestTailVariant) {
  const auto r = run_cli({"grade-test", "--a", grade_file("table1_2023.json"), "--b", grade_file("table1_2024.json"),
                          "--max-letter", "B", "--resamples", "100", "--p-values"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["variant"], "B_and_lower");
  EXPECT_EQ(j["p_values"].size(), 100u);
}

TEST(Cli, IngestAndBuildIndex) {
  TempDir dir;
  const auto chunks = (dir / "chunks.jsonl").string();
  const auto idx = (dir / "a.idx").string();
  auto r = run_cli({"ingest", "--corpus", (data_dir() / "corpus_sample.jsonl").string(), "--names",
                    (data_dir() / "names.txt").string(), "--tag", "WP1", "--out", chunks});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(json::parse(r.out)["chunks_written"].get<int>(), 0);
  r = run_cli({"build-index", "--chunks", chunks, "--out", idx, "--dim", "64"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto index = vectorstore::load_index(idx);
  EXPECT_EQ(index.dim(), 64u);
  EXPECT_EQ(index.provider_fingerprint(), "local_hash:fnv1a64:64");
}

TEST(Cli, LabelStats) {
  TempDir dir;
  ragman::testing::write_file(dir / "ann.jsonl",
                              R"({"conversation_id":"a","pair_index":0,"scope":"in","quality":"good"})"
                              "\n"
                              R"({"conversation_id":"a","pair_index":1,"scope":"in","quality":"bad"})"
                              "\n");
  const auto r = run_cli({"label-stats", "--annotations", (dir / "ann.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["n_pairs"], 2);
  EXPECT_EQ(j["good_rate_overall"], 0.5);
  EXPECT_TRUE(j["good_rate_out_scope"].is_null());
}

}  // namespace
}  // namespace ragman::cli
