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

#include "ragman/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "ragman/error.hpp"
#include "ragman/normal.hpp"
#include "ragman/rng.hpp"
#include "ragman/text.hpp"

namespace ragman::analytics {
namespace {

std::size_t count_conversations(std::span<const LogRecord> pairs) {
  std::set<std::string> ids;
  for (const auto& p : pairs) ids.insert(p.conversation_id);
  return ids.size();
}

}  // namespace

DedupResult dedup_questions(std::span<const LogRecord> pairs, std::size_t max_repeat) {
  if (max_repeat < 1) throw InvalidArgument("max_repeat must be >= 1");
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& p : pairs) ++counts[text::trim(p.question)];

  DedupResult out;
  out.report.pairs_in = pairs.size();
  for (const auto& p : pairs) {
    if (counts[text::trim(p.question)] > max_repeat) {
      ++out.report.pairs_removed_dup;
    } else {
      out.pairs.push_back(p);
    }
  }
  out.report.pairs_out = out.pairs.size();
  out.report.conversations_out = count_conversations(out.pairs);
  return out;
}

BlockPattern BlockPattern::parse(const std::string& spec) {
  BlockPattern p;
  p.spec_ = spec;
  constexpr std::string_view kRegexPrefix = "re:";
  if (spec.rfind(kRegexPrefix, 0) == 0) {
    try {
      p.regex_.emplace(spec.substr(kRegexPrefix.size()),
                       std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw InvalidArgument("invalid blocklist regex '" + spec + "': " + e.what());
    }
  } else {
    if (spec.empty()) throw InvalidArgument("empty blocklist pattern");
    p.literal_ = spec;
  }
  return p;
}

bool BlockPattern::matches(const std::string& question) const {
  if (regex_) return std::regex_search(question, *regex_);
  return text::contains(question, literal_);
}

std::vector<BlockPattern> load_blocklist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<BlockPattern> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    try {
      out.push_back(BlockPattern::parse(line));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

BlocklistResult apply_blocklist(std::span<const LogRecord> pairs, std::span<const BlockPattern> patterns) {
  BlocklistResult out;
  for (const auto& p : pairs) {
    const bool blocked = std::any_of(patterns.begin(), patterns.end(),
                                     [&](const BlockPattern& b) { return b.matches(p.question); });
    if (blocked) {
      ++out.removed;
    } else {
      out.pairs.push_back(p);
    }
  }
  return out;
}

CleanResult clean_pairs(std::span<const LogRecord> pairs, std::span<const BlockPattern> patterns,
                        std::size_t max_repeat) {
  auto dedup = dedup_questions(pairs, max_repeat);
  auto blocked = apply_blocklist(dedup.pairs, patterns);
  CleanResult out;
  out.report = dedup.report;
  out.report.pairs_removed_blocklist = blocked.removed;
  out.pairs = std::move(blocked.pairs);
  out.report.pairs_out = out.pairs.size();
  out.report.conversations_out = count_conversations(out.pairs);
  return out;
}

SampleSizePlan plan_sample_size(std::int64_t population, double confidence, double margin) {
  if (population < 1) throw InvalidArgument("population must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must be in (0, 1)");
  if (!(margin > 0.0 && margin < 1.0)) throw InvalidArgument("margin must be in (0, 1)");
  SampleSizePlan plan;
  plan.z = stats::normal_quantile((1.0 + confidence) / 2.0);
  plan.n0 = plan.z * plan.z * 0.25 / (margin * margin);
  plan.corrected = plan.n0 / (1.0 + (plan.n0 - 1.0) / static_cast<double>(population));
  plan.n = static_cast<std::int64_t>(std::ceil(plan.corrected));
  return plan;
}

std::int64_t sample_size(std::int64_t population, double confidence, double margin) {
  return plan_sample_size(population, confidence, margin).n;
}

std::vector<std::int64_t> allocate_proportional(std::span<const std::int64_t> strata_counts,
                                                std::int64_t total) {
  if (total < 0) throw InvalidArgument("allocation total must be >= 0");
  std::int64_t sum = 0;
  for (auto c : strata_counts) {
    if (c < 0) throw InvalidArgument("stratum counts must be >= 0");
    sum += c;
  }
  if (total > sum) {
    throw InvalidArgument("cannot allocate " + std::to_string(total) + " from a population of " +
                          std::to_string(sum));
  }
  const std::size_t k = strata_counts.size();
  std::vector<std::int64_t> alloc(k, 0);
  if (sum == 0) return alloc;

  // Remainders in units of 1/sum: count_i*total - alloc_i*sum.
  std::vector<std::int64_t> rem(k);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::int64_t scaled = strata_counts[i] * total;
    alloc[i] = std::min((2 * scaled + sum) / (2 * sum), strata_counts[i]);
    rem[i] = scaled - alloc[i] * sum;
    assigned += alloc[i];
  }
  while (assigned < total) {
    std::size_t best = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (alloc[i] < strata_counts[i] && (best == k || rem[i] > rem[best])) best = i;
    }
    ++alloc[best];
    rem[best] -= sum;
    ++assigned;
  }
  while (assigned > total) {
    std::size_t best = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (alloc[i] > 0 && (best == k || rem[i] <= rem[best])) best = i;
    }
    --alloc[best];
    rem[best] += sum;
    --assigned;
  }
  return alloc;
}

std::vector<std::vector<std::string>> sample_conversations(
    const std::vector<std::vector<std::string>>& strata, std::span<const std::int64_t> allocation,
    std::uint64_t seed) {
  if (allocation.size() != strata.size()) {
    throw InvalidArgument("allocation has " + std::to_string(allocation.size()) + " entries for " +
                          std::to_string(strata.size()) + " strata");
  }
  std::vector<std::vector<std::string>> out(strata.size());
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const auto& ids = strata[s];
    const std::int64_t want = allocation[s];
    if (want < 0 || static_cast<std::size_t>(want) > ids.size()) {
      throw InvalidArgument("stratum " + std::to_string(s) + " cannot supply " + std::to_string(want) +
                            " of " + std::to_string(ids.size()));
    }
    std::vector<std::size_t> idx(ids.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Xoshiro256StarStar rng(derive_seed(seed, s));
    const auto k = static_cast<std::size_t>(want);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t r = j + static_cast<std::size_t>(rng.below(idx.size() - j));
      std::swap(idx[j], idx[r]);
    }
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t j = 0; j < k; ++j) out[s].push_back(ids[idx[j]]);
  }
  return out;
}

std::vector<Annotation> parse_annotations(std::string_view content) {
  std::vector<Annotation> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Annotation a;
      a.conversation_id = j.at("conversation_id").get<std::string>();
      a.pair_index = j.at("pair_index").get<std::size_t>();
      a.labels.scope = tutor::scope_from_string(j.at("scope").get<std::string>());
      a.labels.quality = tutor::quality_from_string(j.at("quality").get<std::string>());
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("annotation line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("annotation line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_annotations(ss.str());
}

std::vector<tutor::PairLabels> join_labels(std::span<const LogRecord> pairs,
                                           std::span<const Annotation> annotations) {
  std::map<std::pair<std::string, std::size_t>, tutor::PairLabels> by_key;
  for (const auto& a : annotations) by_key[{a.conversation_id, a.pair_index}] = a.labels;
  std::vector<tutor::PairLabels> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto it = by_key.find({p.conversation_id, p.pair_index});
    if (it == by_key.end()) {
      throw InvalidArgument("pair (" + p.conversation_id + ", " + std::to_string(p.pair_index) +
                            ") has no annotation");
    }
    out.push_back(it->second);
  }
  return out;
}

LabelStats aggregate_labels(std::span<const tutor::PairLabels> labels) {
  if (labels.empty()) throw InvalidArgument("no labeled pairs");
  LabelStats s;
  s.n_pairs = labels.size();
  for (const auto& l : labels) {
    const bool in = l.scope == tutor::Scope::in;
    const bool good = l.quality == tutor::Quality::good;
    s.n_in_scope += in ? 1 : 0;
    s.n_good += good ? 1 : 0;
    s.n_good_in_scope += (in && good) ? 1 : 0;
    s.n_good_out_scope += (!in && good) ? 1 : 0;
  }
  const auto n = static_cast<double>(s.n_pairs);
  const std::size_t n_out = s.n_pairs - s.n_in_scope;
  s.in_scope_rate = static_cast<double>(s.n_in_scope) / n;
  s.good_rate_overall = static_cast<double>(s.n_good) / n;
  if (s.n_in_scope > 0) {
    s.good_rate_in_scope = static_cast<double>(s.n_good_in_scope) / static_cast<double>(s.n_in_scope);
  }
  if (n_out > 0) {
    s.good_rate_out_scope = static_cast<double>(s.n_good_out_scope) / static_cast<double>(n_out);
  }
  return s;
}

LabelStats aggregate_labels(std::span<const tutor::MessagePair> pairs) {
  std::vector<tutor::PairLabels> labels;
  labels.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].labels) throw InvalidArgument("pair " + std::to_string(i) + " is unlabeled");
    labels.push_back(*pairs[i].labels);
  }
  return aggregate_labels(labels);
}

}  // namespace ragman::analytics
