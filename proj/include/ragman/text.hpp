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

// Small string helpers shared by the text-processing modules.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ragman::text {

/// FNV-1a, 64-bit. Stable across platforms and runs.
constexpr std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Whitespace-delimited tokens (space, tab, CR, LF, VT, FF).
std::vector<std::string_view> split_whitespace(std::string_view s);

/// Splits on '\n'. A trailing newline does not produce an empty final line.
std::vector<std::string_view> split_lines(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep);

bool contains(std::string_view haystack, std::string_view needle);

}  // namespace ragman::text
