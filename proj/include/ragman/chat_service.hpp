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

// Anonymous tutoring sessions over JSON/HTTP.
//
//   GET  /healthz
//   GET  /api/tutors
//   POST /api/sessions                    {"tutor_id": "WP1"}
//   POST /api/sessions/{token}/messages   {"question": "..."}
//
// See docs/api.md for payloads and status codes.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "ragman/chat_log.hpp"
#include "ragman/embedding.hpp"
#include "ragman/llm.hpp"
#include "ragman/tutor.hpp"

namespace httplib {
class Server;
}

namespace ragman::chat {

inline constexpr std::size_t kMaxQuestionChars = 4000;

/// 128 random bits, base64url without padding (22 characters).
std::string new_session_token();

struct TutorInfo {
  std::string tutor_id;
  std::string display_name;
};

struct PostResult {
  std::string response;
  std::size_t pair_index = 0;
  /// Present when the tutor failed upstream; the pair is still logged.
  std::optional<std::string> error;
};

/// Transport-independent core of the service. Sessions live in memory;
/// requests on one token are serialized, distinct tokens run concurrently.
class ChatService {
 public:
  ChatService(std::vector<tutor::Tutor> tutors, std::shared_ptr<const embedding::EmbeddingProvider> embedder,
              std::shared_ptr<llm::ChatProvider> llm, std::shared_ptr<LogWriter> log);

  std::vector<TutorInfo> list_tutors() const;

  /// Throws NotFound for an unconfigured tutor.
  std::string create_session(const std::string& tutor_id);

  /// Throws NotFound on an unknown token, InvalidArgument on an empty or
  /// oversize question (nothing is logged in either case).
  PostResult post_message(const std::string& token, const std::string& question);

  /// Copy of the conversation behind a token. Throws NotFound.
  tutor::Conversation conversation(const std::string& token) const;

 private:
  struct Session {
    std::mutex mu;
    std::size_t tutor_index = 0;
    tutor::Conversation conversation;
  };

  std::shared_ptr<Session> find(const std::string& token) const;

  std::vector<tutor::Tutor> tutors_;
  std::shared_ptr<const embedding::EmbeddingProvider> embedder_;
  std::shared_ptr<llm::ChatProvider> llm_;
  std::shared_ptr<LogWriter> log_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Value for Access-Control-Allow-Origin; empty disables CORS headers.
  std::string cors_origin;
};

class HttpServer {
 public:
  HttpServer(ChatService& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Blocks until stop(). Throws IoError if the port cannot be bound.
  void listen();
  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port.
  int start_background();
  void stop();

 private:
  void install_routes();

  ChatService& service_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

/// Everything `serve` needs, read from one JSON document.
struct ServiceConfig {
  ServerOptions server;
  std::filesystem::path tutor_dir;
  std::filesystem::path log_path;
  embedding::EmbeddingProviderConfig embedding;
  enum class LlmKind { remote, scripted } llm_kind = LlmKind::scripted;
  llm::RemoteChatConfig remote_llm;
  std::string scripted_response = "OK";
};

/// Relative paths resolve against the config file's directory.
ServiceConfig load_service_config(const std::filesystem::path& path);

/// Loads every tutor in tutor_dir with its indexes, the providers and the
/// log writer.
std::unique_ptr<ChatService> make_service(const ServiceConfig& config);

}  // namespace ragman::chat
