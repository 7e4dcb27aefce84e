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

#include <set>

#include "ragman/error.hpp"
#include "ragman/normal.hpp"
#include "ragman/rng.hpp"
#include "ragman/text.hpp"

namespace ragman {
namespace {

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(text::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(text::fnv1a64("hello"), 0xa430d84680aabd0bULL);
}

TEST(Text, TrimAndSplit) {
  EXPECT_EQ(text::trim("  a b \n"), "a b");
  EXPECT_EQ(text::trim(" \t "), "");
  const auto toks = text::split_whitespace("  one\ttwo\n three ");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[2], "three");
  EXPECT_EQ(text::split_lines("a\nb\n").size(), 2u);
  EXPECT_EQ(text::split_lines("a\n\nb").size(), 3u);
  EXPECT_TRUE(text::split_lines("").empty());
  EXPECT_EQ(text::to_lower_ascii("AbC-\xC3\x84"), "abc-\xC3\x84");
}

// Reference outputs from an independent implementation of the published
// algorithms (tests/fixtures/rng_reference.py).
TEST(Rng, MatchesReferenceStream) {
  Xoshiro256StarStar rng(0);
  EXPECT_EQ(rng(), 0x99ec5f36cb75f2b4ULL);
  EXPECT_EQ(rng(), 0xbf6e1f784956452aULL);
  EXPECT_EQ(rng(), 0x1a5f849d4933e6e0ULL);
  EXPECT_EQ(derive_seed(42, 3), 0x8c2169269ffd58d0ULL);
}

TEST(Rng, BelowAndUniformRanges) {
  Xoshiro256StarStar rng(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto v = rng.below(6);
    ASSERT_LT(v, 6u);
    seen.insert(v);
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Rng, DerivedStreamsDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(0, i));
  EXPECT_EQ(seeds.size(), 1000u);
}

TEST(Normal, QuantileReferenceValues) {
  EXPECT_NEAR(stats::normal_quantile(0.975), 1.959963984540054, 1e-8);
  EXPECT_NEAR(stats::normal_quantile(0.5), 0.0, 1e-12);
  EXPECT_NEAR(stats::normal_quantile(0.001), -3.090232306167813, 1e-8);
  EXPECT_NEAR(stats::normal_quantile(0.999), 3.090232306167813, 1e-8);
  EXPECT_THROW(stats::normal_quantile(0.0), InvalidArgument);
  EXPECT_THROW(stats::normal_quantile(1.0), InvalidArgument);
}

TEST(Normal, QuantileInvertsSurvival) {
  for (double p = 0.01; p < 1.0; p += 0.01) {
    const double z = stats::normal_quantile(p);
    EXPECT_NEAR(1.0 - stats::normal_sf(z), p, 1e-8);
  }
}

}  // namespace
}  // namespace ragman
