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

// No-code guardrail: a line-heuristic code detector plus a bounded
// regenerate-then-redact loop applied to every tutor response.

#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace ragman::guardrail {

enum class CodeReason { fenced_block, inline_run, keyword_density };

std::string_view to_string(CodeReason r);

struct CodeDetection {
  bool flagged = false;
  std::vector<CodeReason> reasons;
  /// Fraction of lines that look like code, in [0, 1].
  double score = 0.0;

  bool has(CodeReason r) const;
};

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr int kDefaultMaxRetries = 2;
inline constexpr std::size_t kInlineRunLimit = 80;
inline constexpr std::string_view kCodeRemovedMarker = "[code removed \xE2\x80\x94 ask your TA for specifics]";
inline constexpr std::string_view kRegenerationInstruction =
    "Your previous answer contained code. Re-answer with guidance only, no code.";

/// A line is code-like if it ends with ':' or ';', starts with four spaces
/// and contains '(', contains "def ", "return ", "import " or "= ", or
/// contains "()".
bool is_code_like_line(std::string_view line);

/// Total over arbitrary bytes. flagged iff a "```" fence is present or the
/// code-like line fraction reaches `threshold`. inline_run is reported for
/// backtick spans longer than kInlineRunLimit but does not flag by itself.
CodeDetection contains_code(std::string_view text, double threshold = kDefaultThreshold);

/// Replaces fenced blocks (an unterminated fence runs to the end), inline
/// runs and every run of code-like lines with kCodeRemovedMarker. The result
/// never contains "```" and has no code-like lines.
std::string redact_code(std::string_view text);

struct GuardrailOutcome {
  std::string text;
  int regenerations = 0;
  bool redacted = false;
};

using Regenerate = std::function<std::string()>;

/// Returns the first of (candidate, regenerate(), ...) that passes
/// contains_code, calling regenerate at most max_retries times. If none
/// pass, the last candidate is redacted. If regenerate throws, the best
/// candidate so far (lowest score, unfenced preferred) is redacted.
GuardrailOutcome enforce_no_code(std::string candidate, const Regenerate& regenerate,
                                 int max_retries = kDefaultMaxRetries,
                                 double threshold = kDefaultThreshold);

}  // namespace ragman::guardrail
