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

#include "ragman/guardrail.hpp"

#include <algorithm>

#include "ragman/error.hpp"
#include "ragman/text.hpp"

namespace ragman::guardrail {
namespace {

constexpr std::string_view kFence = "```";

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// Backtick spans outside fences: [open, close] byte offsets of single
// backticks.
template <typename F>
void for_each_inline_span(std::string_view text, F&& f) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, kFence.size(), kFence) == 0) {
      i += kFence.size();
      continue;
    }
    if (text[i] != '`') {
      ++i;
      continue;
    }
    auto close = text.find('`', i + 1);
    if (close == std::string_view::npos) return;
    if (text.compare(close, kFence.size(), kFence) == 0) {
      i = close;
      continue;
    }
    f(i, close);
    i = close + 1;
  }
}

std::string replace_fences(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find(kFence, pos);
    if (open == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    out += kCodeRemovedMarker;
    auto close = text.find(kFence, open + kFence.size());
    if (close == std::string_view::npos) {
      pos = text.size();
      break;
    }
    pos = close + kFence.size();
    // Consume any extra backticks of a longer closing fence.
    while (pos < text.size() && text[pos] == '`') ++pos;
  }
  out.append(text.substr(pos));
  return out;
}

std::string replace_inline_runs(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  for_each_inline_span(text, [&](std::size_t open, std::size_t close) {
    if (close - open - 1 <= kInlineRunLimit) return;
    out.append(text.substr(pos, open - pos));
    out += kCodeRemovedMarker;
    pos = close + 1;
  });
  out.append(text.substr(pos));
  return out;
}

std::string elide_code_lines(std::string_view text) {
  std::vector<std::string> kept;
  bool in_run = false;
  for (auto line : text::split_lines(text)) {
    if (is_code_like_line(line)) {
      if (!in_run) kept.emplace_back(kCodeRemovedMarker);
      in_run = true;
    } else {
      kept.emplace_back(line);
      in_run = false;
    }
  }
  return text::join(kept, "\n");
}

}  // namespace

std::string_view to_string(CodeReason r) {
  switch (r) {
    case CodeReason::fenced_block:
      return "fenced_block";
    case CodeReason::inline_run:
      return "inline_run";
    case CodeReason::keyword_density:
      return "keyword_density";
  }
  return "unknown";
}

bool CodeDetection::has(CodeReason r) const {
  return std::find(reasons.begin(), reasons.end(), r) != reasons.end();
}

bool is_code_like_line(std::string_view raw) {
  const std::string_view line = strip_cr(raw);
  const std::string_view right = text::trim(line);
  if (!right.empty() && (right.back() == ':' || right.back() == ';')) return true;
  if (line.size() >= 4 && line.substr(0, 4) == "    " && text::contains(line, "(")) return true;
  for (std::string_view kw : {"def ", "return ", "import ", "= ", "()"}) {
    if (text::contains(line, kw)) return true;
  }
  return false;
}

CodeDetection contains_code(std::string_view text, double threshold) {
  CodeDetection d;
  if (text::contains(text, kFence)) d.reasons.push_back(CodeReason::fenced_block);

  bool long_inline = false;
  for_each_inline_span(text, [&](std::size_t open, std::size_t close) {
    if (close - open - 1 > kInlineRunLimit) long_inline = true;
  });
  if (long_inline) d.reasons.push_back(CodeReason::inline_run);

  const auto lines = text::split_lines(text);
  std::size_t code_like = 0;
  for (auto line : lines) code_like += is_code_like_line(line) ? 1 : 0;
  d.score = static_cast<double>(code_like) / static_cast<double>(std::max<std::size_t>(lines.size(), 1));
  if (d.score >= threshold) d.reasons.push_back(CodeReason::keyword_density);

  d.flagged = d.has(CodeReason::fenced_block) || d.score >= threshold;
  return d;
}

std::string redact_code(std::string_view text) {
  std::string out = elide_code_lines(replace_inline_runs(replace_fences(text)));
  if (text::trim(out).empty()) out = std::string(kCodeRemovedMarker);
  return out;
}

GuardrailOutcome enforce_no_code(std::string candidate, const Regenerate& regenerate,
                                 int max_retries, double threshold) {
  if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must be in (0, 1]");

  GuardrailOutcome outcome;
  auto detection = contains_code(candidate, threshold);
  if (!detection.flagged) {
    outcome.text = std::move(candidate);
    return outcome;
  }

  std::string best = candidate;
  auto best_detection = detection;
  auto worse = [](const CodeDetection& a, const CodeDetection& b) {
    const bool fa = a.has(CodeReason::fenced_block);
    const bool fb = b.has(CodeReason::fenced_block);
    if (fa != fb) return fa;
    return a.score > b.score;
  };

  std::string last = std::move(candidate);
  bool regenerate_failed = false;
  while (outcome.regenerations < max_retries && regenerate) {
    std::string next;
    try {
      next = regenerate();
    } catch (const std::exception&) {
      regenerate_failed = true;
      break;
    }
    ++outcome.regenerations;
    detection = contains_code(next, threshold);
    if (!detection.flagged) {
      outcome.text = std::move(next);
      return outcome;
    }
    if (worse(best_detection, detection)) {
      best = next;
      best_detection = detection;
    }
    last = std::move(next);
  }

  outcome.text = redact_code(regenerate_failed ? best : last);
  outcome.redacted = true;
  return outcome;
}

}  // namespace ragman::guardrail
