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

// Two-sample tests, the letter-grade Monte Carlo comparison and the Venter
// mode estimator.
//
// KS and WMW p-values are exact conditional permutation probabilities for
// small samples (see kKsExactMaxProduct and kWmwExactMaxTotal) and the
// classical asymptotic approximations beyond that.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ragman::grades {

/// Ordinal coding: F = 0 ... A = 4.
enum class Letter : int { F = 0, D = 1, C = 2, B = 3, A = 4 };

inline constexpr std::array<Letter, 5> kLettersDescending = {Letter::A, Letter::B, Letter::C, Letter::D,
                                                             Letter::F};

char to_char(Letter l);
/// Accepts "A".."D", "F" (upper or lower case). Throws ParseError.
Letter letter_from_string(std::string_view s);

struct GradeDistribution {
  std::string cohort;
  /// Indexed by ordinal value.
  std::array<std::int64_t, 5> counts{};

  std::int64_t count(Letter l) const { return counts[static_cast<std::size_t>(l)]; }
  std::int64_t total() const;
  /// One ordinal value per student, ascending.
  std::vector<double> ordinal_values() const;

  bool operator==(const GradeDistribution&) const = default;
};

/// {"cohort": "...", "counts": {"A": 158, ...}}. Missing letters count 0.
/// Throws ParseError on negative counts or unknown letters.
GradeDistribution parse_grades(std::string_view json_text);
GradeDistribution load_grades(const std::filesystem::path& path);
std::string to_json(const GradeDistribution& d);

/// Keeps letters whose ordinal is <= max_letter.
GradeDistribution truncate_grades(const GradeDistribution& d, Letter max_letter);

enum class Method { ks, wmw, ad_perm };
std::string_view to_string(Method m);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Method method = Method::ks;
  /// True when p_value is an exact permutation probability.
  bool exact = false;
};

inline constexpr std::int64_t kKsExactMaxProduct = 10000;
inline constexpr std::int64_t kWmwExactMaxTotal = 60;

/// Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda);

/// D = sup |F_x - F_y| evaluated at every pooled value. Throws
/// InvalidArgument on an empty sample.
TestResult ks_two_sample(std::span<const double> x, std::span<const double> y);

/// KS on two samples given as counts per ordered category.
TestResult ks_from_counts(std::span<const std::int64_t> x_counts, std::span<const std::int64_t> y_counts);

/// Statistic is U for x, with midranks for ties.
TestResult wmw_test(std::span<const double> x, std::span<const double> y);

/// Scholz-Stephens A2_akN (midrank form) for two samples. Requires
/// permutations >= 99.
TestResult ad_two_sample(std::span<const double> x, std::span<const double> y, int permutations,
                         std::uint64_t seed);

/// The A2_akN statistic alone.
double ad_statistic(std::span<const double> x, std::span<const double> y);

/// Centre of the shortest interval spanning window+1 consecutive order
/// statistics; the first such interval wins ties. Default window is
/// floor(sqrt(size)); a single value is its own mode.
double venter_mode(std::span<const double> sample, std::optional<std::size_t> window = std::nullopt);

enum class Pairing { paired, all_pairs };

struct McConfig {
  int resamples = 1000;
  std::int64_t sample_size = 359;
  std::uint64_t seed = 0;
  Pairing pairing = Pairing::paired;
  std::optional<std::size_t> window;

  /// Throws InvalidArgument.
  void validate() const;
};

struct McResult {
  std::vector<double> p_values;
  double mode_p = 0.0;
  std::size_t window = 0;
  McConfig config;
};

/// Resample b pairs of cohorts of size n from the normalized distributions
/// and run KS on each pair. Resample i of cohort a uses stream
/// derive_seed(seed, 2i), of cohort b derive_seed(seed, 2i + 1).
McResult mc_letter_grade_test(const GradeDistribution& a, const GradeDistribution& b, const McConfig& cfg);

}  // namespace ragman::grades
