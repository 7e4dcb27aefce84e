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

#include "ragman/gradestats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ragman/error.hpp"
#include "ragman/normal.hpp"
#include "ragman/rng.hpp"

namespace ragman::grades {
namespace {

struct Block {
  std::int64_t x = 0;
  std::int64_t y = 0;
};

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// P(max_k |i_k n - j_k m| >= k_obs) over uniformly random splits that keep
// the tie blocks, by a forward pass over block boundaries.
double ks_exact_p(const std::vector<Block>& blocks, std::int64_t m, std::int64_t n, std::int64_t k_obs) {
  const std::int64_t total = m + n;
  std::vector<double> prob(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<double> next(prob.size(), 0.0);
  prob[0] = 1.0;
  double absorbed = 0.0;
  std::int64_t seen = 0;
  for (const auto& b : blocks) {
    const std::int64_t c = b.x + b.y;
    const std::int64_t rem = total - seen;
    std::fill(next.begin(), next.end(), 0.0);
    const double log_norm = log_choose(rem, c);
    for (std::int64_t i = 0; i <= m; ++i) {
      const double p = prob[static_cast<std::size_t>(i)];
      if (p == 0.0) continue;
      const std::int64_t x_left = m - i;
      const std::int64_t lo = std::max<std::int64_t>(0, c - (rem - x_left));
      const std::int64_t hi = std::min(c, x_left);
      for (std::int64_t a = lo; a <= hi; ++a) {
        const double w = std::exp(log_choose(x_left, a) + log_choose(rem - x_left, c - a) - log_norm);
        next[static_cast<std::size_t>(i + a)] += p * w;
      }
    }
    seen += c;
    for (std::int64_t i = 0; i <= m; ++i) {
      const std::int64_t j = seen - i;
      if (j < 0 || j > n) continue;
      if (std::abs(i * n - j * m) >= k_obs) {
        absorbed += next[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(i)] = 0.0;
      }
    }
    std::swap(prob, next);
  }
  return std::clamp(absorbed, 0.0, 1.0);
}

TestResult ks_from_blocks(std::vector<Block> blocks) {
  std::int64_t m = 0;
  std::int64_t n = 0;
  for (const auto& b : blocks) {
    m += b.x;
    n += b.y;
  }
  if (m == 0 || n == 0) throw InvalidArgument("ks_two_sample requires two non-empty samples");

  // Canonical orientation so that swapping the samples repeats the exact
  // same arithmetic.
  const auto swapped_less = [&] {
    if (m != n) return n < m;
    for (const auto& b : blocks) {
      if (b.y != b.x) return b.y < b.x;
    }
    return false;
  }();
  if (swapped_less) {
    for (auto& b : blocks) std::swap(b.x, b.y);
    std::swap(m, n);
  }

  std::int64_t k_obs = 0;
  std::int64_t i = 0;
  std::int64_t j = 0;
  for (const auto& b : blocks) {
    i += b.x;
    j += b.y;
    k_obs = std::max(k_obs, std::abs(i * n - j * m));
  }
  TestResult r;
  r.method = Method::ks;
  r.statistic = static_cast<double>(k_obs) / (static_cast<double>(m) * static_cast<double>(n));
  if (m * n <= kKsExactMaxProduct) {
    r.exact = true;
    r.p_value = k_obs == 0 ? 1.0 : ks_exact_p(blocks, m, n, k_obs);
    return r;
  }
  const double e = static_cast<double>(m) * static_cast<double>(n) / static_cast<double>(m + n);
  const double se = std::sqrt(e);
  const double lambda = (se + 0.12 + 0.11 / se) * r.statistic;
  r.p_value = std::clamp(kolmogorov_q(lambda), 0.0, 1.0);
  return r;
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  for (double d : out) {
    if (!std::isfinite(d)) throw InvalidArgument("samples must be finite");
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Block> merge_blocks(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw InvalidArgument("two-sample tests require two non-empty samples");
  const auto sx = sorted_copy(x);
  const auto sy = sorted_copy(y);
  std::vector<Block> blocks;
  std::size_t a = 0;
  std::size_t b = 0;
  while (a < sx.size() || b < sy.size()) {
    double v;
    if (b == sy.size() || (a < sx.size() && sx[a] <= sy[b])) {
      v = sx[a];
    } else {
      v = sy[b];
    }
    Block blk;
    while (a < sx.size() && sx[a] == v) {
      ++blk.x;
      ++a;
    }
    while (b < sy.size() && sy[b] == v) {
      ++blk.y;
      ++b;
    }
    blocks.push_back(blk);
  }
  return blocks;
}

// A2_akN from per-distinct-value counts; terms with a zero denominator
// (a single distinct value) contribute nothing.
double ad_from_blocks(const std::vector<Block>& blocks, std::int64_t m, std::int64_t n) {
  const double N = static_cast<double>(m + n);
  const double ni[2] = {static_cast<double>(m), static_cast<double>(n)};
  double sums[2] = {0.0, 0.0};
  double cum_total = 0.0;
  double cum[2] = {0.0, 0.0};
  for (const auto& b : blocks) {
    const double l = static_cast<double>(b.x + b.y);
    const double f[2] = {static_cast<double>(b.x), static_cast<double>(b.y)};
    const double ba = cum_total + l / 2.0;
    const double denom = ba * (N - ba) - N * l / 4.0;
    cum_total += l;
    for (int s = 0; s < 2; ++s) {
      cum[s] += f[s];
      if (denom <= 0.0) continue;
      const double ma = cum[s] - f[s] / 2.0;
      const double diff = N * ma - ni[s] * ba;
      sums[s] += l * diff * diff / denom;
    }
  }
  return (N - 1.0) / (N * N) * (sums[0] / ni[0] + sums[1] / ni[1]);
}

}  // namespace

char to_char(Letter l) {
  switch (l) {
    case Letter::A: return 'A';
    case Letter::B: return 'B';
    case Letter::C: return 'C';
    case Letter::D: return 'D';
    case Letter::F: return 'F';
  }
  return '?';
}

Letter letter_from_string(std::string_view s) {
  if (s.size() == 1) {
    switch (s[0]) {
      case 'A': case 'a': return Letter::A;
      case 'B': case 'b': return Letter::B;
      case 'C': case 'c': return Letter::C;
      case 'D': case 'd': return Letter::D;
      case 'F': case 'f': return Letter::F;
      default: break;
    }
  }
  throw ParseError("unknown letter grade '" + std::string(s) + "'");
}

std::int64_t GradeDistribution::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::vector<double> GradeDistribution::ordinal_values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total()));
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out.insert(out.end(), static_cast<std::size_t>(counts[k]), static_cast<double>(k));
  }
  return out;
}

GradeDistribution parse_grades(std::string_view json_text) {
  GradeDistribution d;
  try {
    const auto j = nlohmann::json::parse(json_text);
    d.cohort = j.value("cohort", std::string{});
    for (const auto& [key, value] : j.at("counts").items()) {
      const auto c = value.get<std::int64_t>();
      if (c < 0) throw ParseError("negative count for letter " + key);
      d.counts[static_cast<std::size_t>(letter_from_string(key))] = c;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("grade file: ") + e.what());
  }
  return d;
}

GradeDistribution load_grades(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_grades(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string to_json(const GradeDistribution& d) {
  nlohmann::ordered_json counts;
  for (Letter l : kLettersDescending) counts[std::string(1, to_char(l))] = d.count(l);
  nlohmann::ordered_json j;
  j["cohort"] = d.cohort;
  j["counts"] = counts;
  return j.dump();
}

GradeDistribution truncate_grades(const GradeDistribution& d, Letter max_letter) {
  GradeDistribution out = d;
  for (std::size_t k = static_cast<std::size_t>(max_letter) + 1; k < out.counts.size(); ++k) {
    out.counts[k] = 0;
  }
  return out;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ks: return "ks";
    case Method::wmw: return "wmw";
    case Method::ad_perm: return "ad_perm";
  }
  return "?";
}

double kolmogorov_q(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Jacobi theta form of the CDF converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double scale = -pi2 / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double k = 2.0 * j - 1.0;
      const double term = std::exp(k * k * scale);
      cdf += term;
      if (term < 1e-18 * cdf) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> x, std::span<const double> y) {
  return ks_from_blocks(merge_blocks(x, y));
}

TestResult ks_from_counts(std::span<const std::int64_t> x_counts, std::span<const std::int64_t> y_counts) {
  if (x_counts.size() != y_counts.size()) throw InvalidArgument("count vectors differ in length");
  std::vector<Block> blocks;
  blocks.reserve(x_counts.size());
  for (std::size_t k = 0; k < x_counts.size(); ++k) {
    if (x_counts[k] < 0 || y_counts[k] < 0) throw InvalidArgument("counts must be >= 0");
    if (x_counts[k] + y_counts[k] > 0) blocks.push_back({x_counts[k], y_counts[k]});
  }
  return ks_from_blocks(std::move(blocks));
}

TestResult wmw_test(std::span<const double> x, std::span<const double> y) {
  const auto blocks = merge_blocks(x, y);
  const auto m = static_cast<std::int64_t>(x.size());
  const auto n = static_cast<std::int64_t>(y.size());
  const std::int64_t total = m + n;

  // Doubled midranks keep everything integral.
  std::vector<std::int64_t> rank2;
  rank2.reserve(static_cast<std::size_t>(total));
  std::int64_t w2 = 0;
  double tie_term = 0.0;
  std::int64_t next_rank = 1;
  for (const auto& b : blocks) {
    const std::int64_t t = b.x + b.y;
    const std::int64_t r2 = 2 * next_rank + t - 1;
    w2 += b.x * r2;
    rank2.insert(rank2.end(), static_cast<std::size_t>(t), r2);
    tie_term += static_cast<double>(t) * static_cast<double>(t) * static_cast<double>(t) - static_cast<double>(t);
    next_rank += t;
  }

  TestResult r;
  r.method = Method::wmw;
  const std::int64_t u2 = w2 - m * (m + 1);
  r.statistic = static_cast<double>(u2) / 2.0;
  if (blocks.size() == 1) {
    r.p_value = 1.0;
    r.exact = total <= kWmwExactMaxTotal;
    return r;
  }

  if (total <= kWmwExactMaxTotal) {
    const std::int64_t obs = std::abs(u2 - m * n);
    const std::int64_t max_sum = total * (total + 1);
    const auto width = static_cast<std::size_t>(max_sum) + 1;
    std::vector<double> dp(static_cast<std::size_t>(m + 1) * width, 0.0);
    dp[0] = 1.0;
    std::int64_t placed = 0;
    for (std::int64_t r2 : rank2) {
      ++placed;
      for (std::int64_t c = std::min(m, placed); c >= 1; --c) {
        double* row = &dp[static_cast<std::size_t>(c) * width];
        const double* prev = &dp[static_cast<std::size_t>(c - 1) * width];
        for (std::int64_t s = max_sum; s >= r2; --s) row[s] += prev[s - r2];
      }
    }
    const double* row = &dp[static_cast<std::size_t>(m) * width];
    double all = 0.0;
    double hit = 0.0;
    for (std::int64_t s = 0; s <= max_sum; ++s) {
      if (row[s] == 0.0) continue;
      all += row[s];
      if (std::abs(s - m * (m + 1) - m * n) >= obs) hit += row[s];
    }
    r.exact = true;
    r.p_value = std::clamp(hit / all, 0.0, 1.0);
    return r;
  }

  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double Nd = static_cast<double>(total);
  const double var = md * nd / 12.0 * ((Nd + 1.0) - tie_term / (Nd * (Nd - 1.0)));
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double z = (std::abs(r.statistic - md * nd / 2.0) - 0.5) / std::sqrt(var);
  r.p_value = std::clamp(2.0 * stats::normal_sf(z), 0.0, 1.0);
  return r;
}

double ad_statistic(std::span<const double> x, std::span<const double> y) {
  return ad_from_blocks(merge_blocks(x, y), static_cast<std::int64_t>(x.size()),
                        static_cast<std::int64_t>(y.size()));
}

TestResult ad_two_sample(std::span<const double> x, std::span<const double> y, int permutations,
                         std::uint64_t seed) {
  if (permutations < 99) throw InvalidArgument("ad_two_sample requires permutations >= 99");
  auto blocks = merge_blocks(x, y);
  const auto m = static_cast<std::int64_t>(x.size());
  const auto n = static_cast<std::int64_t>(y.size());

  TestResult r;
  r.method = Method::ad_perm;
  r.statistic = ad_from_blocks(blocks, m, n);

  // Pooled observations as block indices; each permutation re-labels the
  // first m positions as sample x.
  std::vector<std::uint32_t> pooled;
  pooled.reserve(static_cast<std::size_t>(m + n));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    pooled.insert(pooled.end(), static_cast<std::size_t>(blocks[k].x + blocks[k].y),
                  static_cast<std::uint32_t>(k));
  }
  const double tol = 1e-10 * std::max(1.0, std::abs(r.statistic));
  Xoshiro256StarStar rng(seed);
  std::vector<Block> perm(blocks.size());
  std::int64_t at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(pooled.size() - k));
      std::swap(pooled[k], pooled[j]);
    }
    for (std::size_t k = 0; k < blocks.size(); ++k) perm[k] = {0, blocks[k].x + blocks[k].y};
    for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k) {
      ++perm[pooled[k]].x;
      --perm[pooled[k]].y;
    }
    if (ad_from_blocks(perm, m, n) >= r.statistic - tol) ++at_least;
  }
  r.p_value = static_cast<double>(1 + at_least) / static_cast<double>(permutations + 1);
  return r;
}

double venter_mode(std::span<const double> sample, std::optional<std::size_t> window) {
  if (sample.empty()) throw InvalidArgument("venter_mode requires a non-empty sample");
  if (sample.size() == 1 && !window) return sample[0];
  const auto sorted = sorted_copy(sample);
  const std::size_t w =
      window ? *window : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(sorted.size()))));
  if (w < 1 || w >= sorted.size()) {
    throw InvalidArgument("venter_mode window must be in [1, " + std::to_string(sorted.size() - 1) + "]");
  }
  std::size_t best = 0;
  double best_width = sorted[w] - sorted[0];
  for (std::size_t i = 1; i + w < sorted.size(); ++i) {
    const double width = sorted[i + w] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return (sorted[best] + sorted[best + w]) / 2.0;
}

void McConfig::validate() const {
  if (resamples < 2) throw InvalidArgument("resamples must be >= 2");
  if (sample_size < 1) throw InvalidArgument("sample size must be >= 1");
  if (window && *window < 1) throw InvalidArgument("window must be >= 1");
}

namespace {

std::array<std::int64_t, 5> draw_counts(const std::array<std::int64_t, 5>& cum, std::int64_t n,
                                        std::uint64_t stream_seed) {
  Xoshiro256StarStar rng(stream_seed);
  const auto total = static_cast<std::uint64_t>(cum.back());
  std::array<std::int64_t, 5> out{};
  for (std::int64_t s = 0; s < n; ++s) {
    const auto r = static_cast<std::int64_t>(rng.below(total));
    std::size_t k = 0;
    while (r >= cum[k]) ++k;
    ++out[k];
  }
  return out;
}

std::array<std::int64_t, 5> cumulative(const GradeDistribution& d) {
  std::array<std::int64_t, 5> cum{};
  std::partial_sum(d.counts.begin(), d.counts.end(), cum.begin());
  return cum;
}

}  // namespace

McResult mc_letter_grade_test(const GradeDistribution& a, const GradeDistribution& b, const McConfig& cfg) {
  cfg.validate();
  for (const auto* d : {&a, &b}) {
    for (auto c : d->counts) {
      if (c < 0) throw InvalidArgument("grade counts must be >= 0");
    }
    if (d->total() <= 0) throw InvalidArgument("grade distribution '" + d->cohort + "' is empty");
  }
  const auto cum_a = cumulative(a);
  const auto cum_b = cumulative(b);
  const auto resamples = static_cast<std::size_t>(cfg.resamples);

  McResult out;
  out.config = cfg;
  if (cfg.pairing == Pairing::paired) {
    out.p_values.reserve(resamples);
    for (std::size_t i = 0; i < resamples; ++i) {
      const auto xa = draw_counts(cum_a, cfg.sample_size, derive_seed(cfg.seed, 2 * i));
      const auto xb = draw_counts(cum_b, cfg.sample_size, derive_seed(cfg.seed, 2 * i + 1));
      out.p_values.push_back(ks_from_counts(xa, xb).p_value);
    }
  } else {
    std::vector<std::array<std::int64_t, 5>> sa(resamples);
    std::vector<std::array<std::int64_t, 5>> sb(resamples);
    for (std::size_t i = 0; i < resamples; ++i) {
      sa[i] = draw_counts(cum_a, cfg.sample_size, derive_seed(cfg.seed, 2 * i));
      sb[i] = draw_counts(cum_b, cfg.sample_size, derive_seed(cfg.seed, 2 * i + 1));
    }
    out.p_values.reserve(resamples * resamples);
    for (const auto& xa : sa) {
      for (const auto& xb : sb) out.p_values.push_back(ks_from_counts(xa, xb).p_value);
    }
  }
  out.window = cfg.window ? *cfg.window
                          : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(out.p_values.size()))));
  out.mode_p = venter_mode(out.p_values, out.window);
  return out;
}

}  // namespace ragman::grades
