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

// Append-only conversation log: one JSON object per line and per message
// pair. The schema carries no identity field.

#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ragman::chat {

struct LogRecord {
  std::string conversation_id;
  std::string tutor_id;
  std::size_t pair_index = 0;
  std::string timestamp;  // RFC 3339, UTC, microseconds
  std::string question;
  std::string response;
  std::vector<std::string> retrieved_chunk_ids;
  std::optional<std::string> error_marker;

  bool operator==(const LogRecord&) const = default;
};

/// "2024-01-09T17:03:12.123456Z".
std::string format_rfc3339(std::chrono::system_clock::time_point t);
/// Inverse of format_rfc3339 (fraction optional). Throws ParseError.
std::chrono::system_clock::time_point parse_rfc3339(std::string_view s);

std::string to_json_line(const LogRecord& r);
/// Throws ParseError.
LogRecord parse_log_record(std::string_view line);

struct LogReadResult {
  std::vector<LogRecord> records;
  /// 1-based line numbers that failed to parse, including a torn final
  /// line left by a crash mid-write.
  std::vector<std::size_t> bad_lines;
};

LogReadResult read_log(const std::filesystem::path& path);

/// Serializes appends from any number of threads. Each record is written
/// with its newline in a single call and flushed before append returns.
class LogWriter {
 public:
  explicit LogWriter(const std::filesystem::path& path);
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void append(const LogRecord& record);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::mutex mu_;
};

}  // namespace ragman::chat
