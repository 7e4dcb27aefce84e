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

#include "ragman/chat_log.hpp"

#include <charconv>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ragman/error.hpp"
#include "ragman/text.hpp"

namespace ragman::chat {
namespace {

using nlohmann::json;

int parse_int(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) throw ParseError("timestamp too short");
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (ec != std::errc() || ptr != s.data() + pos + len) throw ParseError("bad timestamp digits");
  return v;
}

void expect(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c) throw ParseError("malformed RFC 3339 timestamp");
}

}  // namespace

std::string format_rfc3339(std::chrono::system_clock::time_point t) {
  using namespace std::chrono;
  const auto us = duration_cast<microseconds>(t.time_since_epoch()).count();
  std::int64_t secs = us / 1'000'000;
  std::int64_t frac = us % 1'000'000;
  if (frac < 0) {
    frac += 1'000'000;
    --secs;
  }
  const std::time_t tt = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<long long>(frac));
  return buf;
}

std::chrono::system_clock::time_point parse_rfc3339(std::string_view s) {
  std::tm tm{};
  tm.tm_year = parse_int(s, 0, 4) - 1900;
  expect(s, 4, '-');
  tm.tm_mon = parse_int(s, 5, 2) - 1;
  expect(s, 7, '-');
  tm.tm_mday = parse_int(s, 8, 2);
  expect(s, 10, 'T');
  tm.tm_hour = parse_int(s, 11, 2);
  expect(s, 13, ':');
  tm.tm_min = parse_int(s, 14, 2);
  expect(s, 16, ':');
  tm.tm_sec = parse_int(s, 17, 2);
  std::size_t pos = 19;
  std::int64_t micros = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 6) micros = micros * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw ParseError("empty timestamp fraction");
    for (std::size_t d = digits; d < 6; ++d) micros *= 10;
  }
  expect(s, pos, 'Z');
  if (pos + 1 != s.size()) throw ParseError("trailing characters after timestamp");
  const std::time_t secs = timegm(&tm);
  return std::chrono::system_clock::time_point(std::chrono::seconds(secs) +
                                               std::chrono::microseconds(micros));
}

std::string to_json_line(const LogRecord& r) {
  json j = {{"conversation_id", r.conversation_id},
            {"tutor_id", r.tutor_id},
            {"pair_index", r.pair_index},
            {"timestamp", r.timestamp},
            {"question", r.question},
            {"response", r.response},
            {"retrieved_chunk_ids", r.retrieved_chunk_ids}};
  j["error_marker"] = r.error_marker ? json(*r.error_marker) : json(nullptr);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

LogRecord parse_log_record(std::string_view line) {
  try {
    const auto j = json::parse(line);
    LogRecord r;
    r.conversation_id = j.at("conversation_id").get<std::string>();
    r.tutor_id = j.at("tutor_id").get<std::string>();
    r.pair_index = j.at("pair_index").get<std::size_t>();
    r.timestamp = j.at("timestamp").get<std::string>();
    parse_rfc3339(r.timestamp);
    r.question = j.at("question").get<std::string>();
    r.response = j.at("response").get<std::string>();
    r.retrieved_chunk_ids = j.value("retrieved_chunk_ids", std::vector<std::string>{});
    if (auto it = j.find("error_marker"); it != j.end() && it->is_string()) {
      r.error_marker = it->get<std::string>();
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad log record: ") + e.what());
  }
}

LogReadResult read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();

  LogReadResult out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.records.push_back(parse_log_record(line));
    } catch (const ParseError&) {
      out.bad_lines.push_back(line_no);
    }
  }
  return out;
}

LogWriter::LogWriter(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  file_ = std::fopen(path_.c_str(), "ab");
  if (file_ == nullptr) throw IoError("cannot open log " + path_.string());
}

LogWriter::~LogWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void LogWriter::append(const LogRecord& record) {
  std::string line = to_json_line(record);
  line += '\n';
  std::lock_guard lock(mu_);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw IoError("log write failed for " + path_.string());
  }
}

}  // namespace ragman::chat
