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

// Offline study pipeline over logged message pairs: cleaning, sample-size
// planning, proportional stratified sampling and label aggregation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "ragman/chat_log.hpp"
#include "ragman/tutor.hpp"

namespace ragman::analytics {

using chat::LogRecord;

struct CleaningReport {
  std::size_t pairs_in = 0;
  std::size_t pairs_removed_dup = 0;
  std::size_t pairs_removed_blocklist = 0;
  std::size_t pairs_out = 0;
  std::size_t conversations_out = 0;
};

struct DedupResult {
  std::vector<LogRecord> pairs;
  CleaningReport report;
};

/// Groups questions by exact bytes after trimming outer whitespace. Every
/// occurrence of a group larger than max_repeat is dropped; the rest keep
/// their order. Counts are global across conversations.
DedupResult dedup_questions(std::span<const LogRecord> pairs, std::size_t max_repeat = 3);

/// A literal (case-sensitive substring) pattern, or with the "re:" prefix
/// a case-insensitive ECMAScript regex.
class BlockPattern {
 public:
  /// Throws InvalidArgument on an invalid regex.
  static BlockPattern parse(const std::string& spec);

  bool matches(const std::string& question) const;
  const std::string& spec() const noexcept { return spec_; }

 private:
  std::string spec_;
  std::string literal_;
  std::optional<std::regex> regex_;
};

/// One pattern per line; blank lines and lines starting with '#' skipped.
std::vector<BlockPattern> load_blocklist(const std::filesystem::path& path);

struct BlocklistResult {
  std::vector<LogRecord> pairs;
  std::size_t removed = 0;
};

BlocklistResult apply_blocklist(std::span<const LogRecord> pairs, std::span<const BlockPattern> patterns);

struct CleanResult {
  std::vector<LogRecord> pairs;
  CleaningReport report;
};

/// dedup_questions followed by apply_blocklist.
CleanResult clean_pairs(std::span<const LogRecord> pairs, std::span<const BlockPattern> patterns,
                        std::size_t max_repeat = 3);

struct SampleSizePlan {
  double z = 0.0;
  double n0 = 0.0;         // infinite-population size, z^2 / (4 margin^2)
  double corrected = 0.0;  // n0 / (1 + (n0 - 1) / population)
  std::int64_t n = 0;      // ceil(corrected)
};

/// Throws InvalidArgument on population < 1 or confidence/margin outside
/// (0, 1).
SampleSizePlan plan_sample_size(std::int64_t population, double confidence, double margin);
std::int64_t sample_size(std::int64_t population, double confidence, double margin);

/// Hamilton-style allocation: round each ideal share count_i*total/sum
/// half-up (capped at the stratum size), then repair the sum by adding to
/// the largest remainders or removing from the smallest. Ties go to the
/// lower index when adding, the higher index when removing. Throws
/// InvalidArgument when total exceeds the population.
std::vector<std::int64_t> allocate_proportional(std::span<const std::int64_t> strata_counts,
                                                std::int64_t total);

/// Uniform draw without replacement of allocation[i] ids from stratum i,
/// each stratum on its own seeded stream. Selected ids keep their
/// population order. Throws InvalidArgument on an infeasible allocation.
std::vector<std::vector<std::string>> sample_conversations(
    const std::vector<std::vector<std::string>>& strata, std::span<const std::int64_t> allocation,
    std::uint64_t seed);

struct Annotation {
  std::string conversation_id;
  std::size_t pair_index = 0;
  tutor::PairLabels labels;
};

/// JSON lines {conversation_id, pair_index, scope, quality}. Throws
/// ParseError with the line number.
std::vector<Annotation> load_annotations(const std::filesystem::path& path);
std::vector<Annotation> parse_annotations(std::string_view content);

/// Labels for every pair, in pair order. Throws InvalidArgument naming the
/// first pair without an annotation.
std::vector<tutor::PairLabels> join_labels(std::span<const LogRecord> pairs,
                                           std::span<const Annotation> annotations);

struct LabelStats {
  std::size_t n_pairs = 0;
  std::size_t n_in_scope = 0;
  std::size_t n_good = 0;
  std::size_t n_good_in_scope = 0;
  std::size_t n_good_out_scope = 0;

  double in_scope_rate = 0.0;
  double good_rate_overall = 0.0;
  /// Empty when there are no pairs in that scope.
  std::optional<double> good_rate_in_scope;
  std::optional<double> good_rate_out_scope;
};

/// Throws InvalidArgument on an empty input.
LabelStats aggregate_labels(std::span<const tutor::PairLabels> labels);
/// Throws InvalidArgument if any pair is unlabeled.
LabelStats aggregate_labels(std::span<const tutor::MessagePair> pairs);

}  // namespace ragman::analytics
