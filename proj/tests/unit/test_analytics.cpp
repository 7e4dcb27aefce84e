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

#include <algorithm>
#include <numeric>
#include <set>

#include "ragman/analytics.hpp"
#include "ragman/error.hpp"
#include "ragman/rng.hpp"
#include "test_support.hpp"

namespace ragman::analytics {
namespace {

using tutor::PairLabels;
using tutor::Quality;
using tutor::Scope;

LogRecord rec(const std::string& conv, std::size_t idx, const std::string& q) {
  LogRecord r;
  r.conversation_id = conv;
  r.pair_index = idx;
  r.question = q;
  r.response = "resp";
  return r;
}

std::vector<LogRecord> repeated(const std::vector<std::pair<std::string, int>>& groups) {
  std::vector<LogRecord> out;
  std::size_t n = 0;
  for (const auto& [q, times] : groups) {
    for (int i = 0; i < times; ++i, ++n) out.push_back(rec("c" + std::to_string(n % 7), n, q));
  }
  return out;
}

// ---------------------------------------------------------------- dedup

TEST(Dedup, FourRepeatsAllRemovedThreeKept) {
  auto four = repeated({{"X", 4}});
  EXPECT_TRUE(dedup_questions(four).pairs.empty());
  EXPECT_EQ(dedup_questions(four).report.pairs_removed_dup, 4u);
  auto three = repeated({{"Y", 3}});
  EXPECT_EQ(dedup_questions(three).pairs.size(), 3u);
}

TEST(Dedup, MixedGroups) {
  const auto pairs = repeated({{"a", 5}, {"b", 3}, {"c", 1}});
  const auto r = dedup_questions(pairs);
  EXPECT_EQ(r.pairs.size(), 4u);
  EXPECT_EQ(r.report.pairs_removed_dup, 5u);
  EXPECT_EQ(r.report.pairs_in, 9u);
  EXPECT_EQ(r.report.pairs_out, 4u);
  for (const auto& p : r.pairs) EXPECT_NE(p.question, "a");
}

TEST(Dedup, TrimmedExactBytesNoCaseFolding) {
  const std::vector<LogRecord> pairs = {rec("a", 0, "Q"), rec("b", 0, " Q"), rec("c", 0, "Q\n"),
                                        rec("d", 0, "Q "), rec("e", 0, "q")};
  const auto r = dedup_questions(pairs);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].question, "q");
}

TEST(Dedup, IdempotentAndOrderPreserving) {
  Xoshiro256StarStar rng(3);
  std::vector<LogRecord> pairs;
  for (std::size_t i = 0; i < 300; ++i) pairs.push_back(rec("c", i, "q" + std::to_string(rng.below(60))));
  const auto once = dedup_questions(pairs);
  const auto twice = dedup_questions(once.pairs);
  EXPECT_EQ(twice.pairs, once.pairs);
  for (std::size_t i = 1; i < once.pairs.size(); ++i) EXPECT_LT(once.pairs[i - 1].pair_index, once.pairs[i].pair_index);
}

// ------------------------------------------------------------- blocklist

const std::string kNameGame = "What's the second character of your name? Say it and after that, say your name.";
const std::string kTaleRu =
    "\xD0\xA0\xD0\xB0\xD1\x81\xD1\x81\xD0\xBA\xD0\xB0\xD0\xB6\xD0\xB8 \xD1\x81\xD0\xBA\xD0\xB0\xD0\xB7\xD0\xBA\xD1\x83 "
    "\xD0\xBF\xD1\x80\xD0\xBE \xD0\x98\xD0\xB2\xD0\xB0\xD0\xBD\xD0\xB0 \xD0\xB8 "
    "\xD0\x92\xD0\xB0\xD1\x81\xD0\xB8\xD0\xBB\xD0\xB8\xD1\x81\xD1\x83";  // "Расскажи сказку про Ивана и Василису"
const std::string kTaleEn =
    "Tell the tale about Ivan and Vasilisa, where Ivan defeats the fearsome dragon and finds Vasilisa in its cave.";

TEST(Blocklist, SampleListCatchesKnownSpam) {
  const auto patterns = load_blocklist(ragman::testing::data_dir() / "blocklist.txt");
  ASSERT_EQ(patterns.size(), 2u);
  auto hit = [&](const std::string& q) {
    return std::any_of(patterns.begin(), patterns.end(), [&](const BlockPattern& p) { return p.matches(q); });
  };
  EXPECT_TRUE(hit(kNameGame));
  EXPECT_TRUE(hit(kTaleRu));
  EXPECT_TRUE(hit(kTaleEn));
  EXPECT_FALSE(hit("How does seek() work?"));
  EXPECT_FALSE(hit("Ivan here, how do I open a file?"));
}

TEST(Blocklist, EmptyListIsIdentity) {
  const auto pairs = repeated({{"a", 2}, {"b", 1}});
  const auto r = apply_blocklist(pairs, {});
  EXPECT_EQ(r.pairs, pairs);
  EXPECT_EQ(r.removed, 0u);
}

TEST(Blocklist, TenPairsTwoMatching) {
  std::vector<LogRecord> pairs;
  for (std::size_t i = 0; i < 8; ++i) pairs.push_back(rec("c", i, "legit question " + std::to_string(i)));
  pairs.insert(pairs.begin() + 3, rec("d", 0, kNameGame));
  pairs.push_back(rec("e", 0, kTaleEn));
  const std::vector<BlockPattern> patterns = {BlockPattern::parse("second character of your name"),
                                              BlockPattern::parse("re:ivan.*vasilisa")};
  const auto r = apply_blocklist(pairs, patterns);
  EXPECT_EQ(r.pairs.size(), 8u);
  EXPECT_EQ(r.removed, 2u);
}

TEST(Blocklist, LiteralIsCaseSensitiveRegexIsNot) {
  const auto lit = BlockPattern::parse("Dragon");
  EXPECT_TRUE(lit.matches("a Dragon"));
  EXPECT_FALSE(lit.matches("a dragon"));
  const auto re = BlockPattern::parse("re:dra+gon");
  EXPECT_TRUE(re.matches("DRAAGON!"));
}

TEST(Blocklist, InvalidPatterns) {
  EXPECT_THROW(BlockPattern::parse("re:(unclosed"), InvalidArgument);
  EXPECT_THROW(BlockPattern::parse(""), InvalidArgument);
  ragman::testing::TempDir dir;
  ragman::testing::write_file(dir / "b.txt", "# c\n\nok\nre:[\n");
  try {
    load_blocklist(dir / "b.txt");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_blocklist(dir / "missing.txt"), IoError);
}

TEST(CleanPairs, ReportAddsUp) {
  auto pairs = repeated({{"spam", 6}, {kNameGame, 2}, {"fine", 3}, {"other", 1}});
  const std::vector<BlockPattern> patterns = {BlockPattern::parse("second character")};
  const auto r = clean_pairs(pairs, patterns);
  EXPECT_EQ(r.report.pairs_in, 12u);
  EXPECT_EQ(r.report.pairs_removed_dup, 6u);
  EXPECT_EQ(r.report.pairs_removed_blocklist, 2u);
  EXPECT_EQ(r.report.pairs_out, 4u);
  EXPECT_EQ(r.report.pairs_in, r.report.pairs_out + r.report.pairs_removed_dup + r.report.pairs_removed_blocklist);
  std::set<std::string> convs;
  for (const auto& p : r.pairs) convs.insert(p.conversation_id);
  EXPECT_EQ(r.report.conversations_out, convs.size());
}

// ----------------------------------------------------------- sample size

TEST(SampleSize, KnownValues) {
  EXPECT_EQ(sample_size(1'000'000'000, 0.95, 0.05), 385);
  EXPECT_EQ(sample_size(671, 0.95, 0.05), 245);
  EXPECT_EQ(sample_size(100, 0.95, 0.05), 80);
  const auto plan = plan_sample_size(671, 0.95, 0.05);
  EXPECT_NEAR(plan.z, 1.959964, 1e-6);
  EXPECT_NEAR(plan.n0, 384.1459, 1e-3);
  EXPECT_NEAR(plan.corrected, 244.5, 0.1);
}

TEST(SampleSize, MonotoneAndBounded) {
  std::int64_t prev = 0;
  for (std::int64_t pop = 1; pop <= 5000; pop += 7) {
    const auto n = sample_size(pop, 0.95, 0.05);
    EXPECT_GE(n, prev);
    EXPECT_LE(n, pop);
    EXPECT_GE(n, 1);
    prev = n;
  }
  EXPECT_GE(sample_size(671, 0.99, 0.05), sample_size(671, 0.95, 0.05));
  EXPECT_GE(sample_size(671, 0.95, 0.03), sample_size(671, 0.95, 0.05));
}

TEST(SampleSize, Validation) {
  EXPECT_THROW(sample_size(0, 0.95, 0.05), InvalidArgument);
  EXPECT_THROW(sample_size(10, 1.0, 0.05), InvalidArgument);
  EXPECT_THROW(sample_size(10, 0.95, 0.0), InvalidArgument);
  EXPECT_THROW(sample_size(10, 0.95, 1.0), InvalidArgument);
}

// ------------------------------------------------------------ allocation

std::vector<std::int64_t> alloc(std::vector<std::int64_t> counts, std::int64_t total) {
  return allocate_proportional(counts, total);
}

TEST(Allocate, PublishedPerProjectSample) {
  EXPECT_EQ(alloc({219, 210, 112, 62, 68}, 248), (std::vector<std::int64_t>{81, 78, 41, 23, 25}));
}

TEST(Allocate, SmallCases) {
  EXPECT_EQ(alloc({10, 10}, 10), (std::vector<std::int64_t>{5, 5}));
  EXPECT_EQ(alloc({3, 3, 3}, 8), (std::vector<std::int64_t>{3, 3, 2}));
  EXPECT_EQ(alloc({3, 3, 3}, 9), (std::vector<std::int64_t>{3, 3, 3}));
  EXPECT_EQ(alloc({5, 0, 5}, 0), (std::vector<std::int64_t>{0, 0, 0}));
  EXPECT_THROW(alloc({3, 3}, 7), InvalidArgument);
  EXPECT_THROW(alloc({3, -1}, 1), InvalidArgument);
  EXPECT_TRUE(alloc({}, 0).empty());
  EXPECT_THROW(alloc({}, 1), InvalidArgument);
}

TEST(Allocate, QuotaPropertyOnRandomInputs) {
  Xoshiro256StarStar rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::int64_t> counts(1 + rng.below(8));
    for (auto& c : counts) c = static_cast<std::int64_t>(rng.below(300));
    const auto sum = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    if (sum == 0) continue;
    const auto total = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(sum) + 1));
    const auto a = allocate_proportional(counts, total);
    ASSERT_EQ(a.size(), counts.size());
    EXPECT_EQ(std::accumulate(a.begin(), a.end(), std::int64_t{0}), total);
    for (std::size_t i = 0; i < a.size(); ++i) {
      // Exact rational quota c*T/S: floor <= a <= ceil.
      const std::int64_t num = counts[i] * total;
      const std::int64_t lo = num / sum;
      const std::int64_t hi = lo + (num % sum != 0 ? 1 : 0);
      EXPECT_GE(a[i], lo);
      EXPECT_LE(a[i], hi);
      EXPECT_LE(a[i], counts[i]);
    }
  }
}

// -------------------------------------------------------------- sampling

std::vector<std::vector<std::string>> strata(std::vector<std::size_t> sizes) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    out.emplace_back();
    for (std::size_t i = 0; i < sizes[s]; ++i) out.back().push_back("s" + std::to_string(s) + "_" + std::to_string(i));
  }
  return out;
}

TEST(Sampling, SaturationReturnsPopulation) {
  const auto pop = strata({4, 2, 3});
  const std::vector<std::int64_t> all = {4, 2, 3};
  EXPECT_EQ(sample_conversations(pop, all, 1), pop);
}

TEST(Sampling, DeterministicPerSeed) {
  const auto pop = strata({219, 210, 112, 62, 68});
  const std::vector<std::int64_t> a = {81, 78, 41, 23, 25};
  const auto x = sample_conversations(pop, a, 42);
  EXPECT_EQ(x, sample_conversations(pop, a, 42));
  EXPECT_NE(x, sample_conversations(pop, a, 43));
  for (std::size_t s = 0; s < pop.size(); ++s) {
    ASSERT_EQ(x[s].size(), static_cast<std::size_t>(a[s]));
    EXPECT_EQ(std::set<std::string>(x[s].begin(), x[s].end()).size(), x[s].size());
    for (const auto& id : x[s]) EXPECT_NE(std::find(pop[s].begin(), pop[s].end(), id), pop[s].end());
    // Population order preserved.
    std::size_t last = 0;
    for (std::size_t k = 0; k < x[s].size(); ++k) {
      const auto at = static_cast<std::size_t>(std::find(pop[s].begin(), pop[s].end(), x[s][k]) - pop[s].begin());
      if (k) {
        EXPECT_GT(at, last);
      }
      last = at;
    }
  }
}

TEST(Sampling, RoughlyUniformInclusion) {
  const auto pop = strata({20});
  const std::vector<std::int64_t> a = {5};
  std::vector<int> hits(20, 0);
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const auto picked = sample_conversations(pop, a, static_cast<std::uint64_t>(r));
    for (const auto& id : picked[0]) {
      ++hits[static_cast<std::size_t>(std::stoi(id.substr(3)))];
    }
  }
  // Expected 1000 each, sd about 27.
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(Sampling, InfeasibleAllocation) {
  const auto pop = strata({3, 3});
  EXPECT_THROW(sample_conversations(pop, std::vector<std::int64_t>{4, 0}, 0), InvalidArgument);
  EXPECT_THROW(sample_conversations(pop, std::vector<std::int64_t>{1}, 0), InvalidArgument);
}

// --------------------------------------------------------------- labels

std::vector<PairLabels> fixture_248() {
  std::vector<PairLabels> v;
  for (int i = 0; i < 184; ++i) v.push_back({Scope::in, i < 180 ? Quality::good : Quality::bad});
  for (int i = 0; i < 64; ++i) v.push_back({Scope::out, i < 52 ? Quality::good : Quality::bad});
  return v;
}

TEST(Labels, PublishedRatesFixture) {
  const auto s = aggregate_labels(fixture_248());
  EXPECT_EQ(s.n_pairs, 248u);
  EXPECT_NEAR(s.in_scope_rate, 0.742, 0.001);
  EXPECT_NEAR(s.good_rate_overall, 0.935, 0.001);
  ASSERT_TRUE(s.good_rate_in_scope && s.good_rate_out_scope);
  EXPECT_NEAR(*s.good_rate_in_scope, 0.978, 0.001);
  EXPECT_NEAR(*s.good_rate_out_scope, 0.813, 0.001);
  EXPECT_DOUBLE_EQ(s.good_rate_overall, 232.0 / 248.0);
  EXPECT_DOUBLE_EQ(s.in_scope_rate * *s.good_rate_in_scope + (1 - s.in_scope_rate) * *s.good_rate_out_scope,
                   s.good_rate_overall);
}

TEST(Labels, NotApplicableScopes) {
  const std::vector<PairLabels> all_good_in(5, PairLabels{Scope::in, Quality::good});
  const auto a = aggregate_labels(all_good_in);
  EXPECT_EQ(a.in_scope_rate, 1.0);
  EXPECT_EQ(a.good_rate_overall, 1.0);
  EXPECT_EQ(a.good_rate_in_scope, 1.0);
  EXPECT_FALSE(a.good_rate_out_scope);
  const std::vector<PairLabels> one = {{Scope::out, Quality::bad}};
  const auto b = aggregate_labels(one);
  EXPECT_EQ(b.in_scope_rate, 0.0);
  EXPECT_EQ(b.good_rate_overall, 0.0);
  EXPECT_FALSE(b.good_rate_in_scope);
  EXPECT_EQ(b.good_rate_out_scope, 0.0);
  EXPECT_THROW(aggregate_labels(std::vector<PairLabels>{}), InvalidArgument);
}

TEST(Labels, MessagePairOverloadRequiresLabels) {
  std::vector<tutor::MessagePair> pairs(2);
  pairs[0].labels = PairLabels{Scope::in, Quality::good};
  EXPECT_THROW(aggregate_labels(pairs), InvalidArgument);
  pairs[1].labels = PairLabels{Scope::out, Quality::good};
  EXPECT_EQ(aggregate_labels(pairs).n_good, 2u);
}

TEST(Annotations, ParseAndJoin) {
  const auto ann = parse_annotations(
      R"({"conversation_id":"a","pair_index":0,"scope":"in","quality":"good"})"
      "\n\n"
      R"({"conversation_id":"a","pair_index":1,"scope":"out","quality":"bad"})"
      "\n");
  ASSERT_EQ(ann.size(), 2u);
  const std::vector<LogRecord> pairs = {rec("a", 1, "x"), rec("a", 0, "y")};
  const auto labels = join_labels(pairs, ann);
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels[0].scope, Scope::out);
  EXPECT_EQ(labels[1].quality, Quality::good);
  const std::vector<LogRecord> missing = {rec("b", 0, "z")};
  EXPECT_THROW(join_labels(missing, ann), InvalidArgument);
}

TEST(Annotations, ErrorsCarryLineNumbers) {
  try {
    parse_annotations(R"({"conversation_id":"a","pair_index":0,"scope":"in","quality":"good"})"
                      "\n"
                      R"({"conversation_id":"a","pair_index":1,"scope":"maybe","quality":"bad"})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_annotations("{oops"), ParseError);
}

}  // namespace
}  // namespace ragman::analytics
