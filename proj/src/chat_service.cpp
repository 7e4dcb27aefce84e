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

#include "ragman/chat_service.hpp"

#include <array>
#include <fstream>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "ragman/corpus.hpp"
#include "ragman/error.hpp"
#include "ragman/text.hpp"

namespace ragman::chat {
namespace {

using nlohmann::json;

std::string base64url(std::span<const unsigned char> bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (unsigned char b : bytes) {
    acc = (acc << 8) | b;
    bits += 8;
    while (bits >= 6) {
      bits -= 6;
      out += kAlphabet[(acc >> bits) & 0x3f];
    }
  }
  if (bits > 0) out += kAlphabet[(acc << (6 - bits)) & 0x3f];
  return out;
}

std::array<unsigned char, 16> random_128() {
  thread_local std::random_device rd;
  std::array<unsigned char, 16> bytes{};
  for (std::size_t i = 0; i < bytes.size(); i += 4) {
    const std::uint32_t v = rd();
    for (std::size_t k = 0; k < 4; ++k) bytes[i + k] = static_cast<unsigned char>(v >> (8 * k));
  }
  return bytes;
}

std::string new_conversation_id() {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id = "c-";
  for (unsigned char b : random_128()) {
    id += kHex[b >> 4];
    id += kHex[b & 0xf];
  }
  return id;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply_json(res, status, {{"error", message}});
}

// Parses the request body as a JSON object and returns the named string
// field, replying 400 and returning nullopt on failure.
std::optional<std::string> string_field(const httplib::Request& req, httplib::Response& res,
                                        const char* field) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::parse_error&) {
    reply_error(res, 400, "request body must be JSON");
    return std::nullopt;
  }
  if (!body.is_object() || !body.contains(field) || !body[field].is_string()) {
    reply_error(res, 400, std::string("missing string field '") + field + "'");
    return std::nullopt;
  }
  return body[field].get<std::string>();
}

}  // namespace

std::string new_session_token() {
  const auto bytes = random_128();
  return base64url(bytes);
}

ChatService::ChatService(std::vector<tutor::Tutor> tutors,
                         std::shared_ptr<const embedding::EmbeddingProvider> embedder,
                         std::shared_ptr<llm::ChatProvider> llm, std::shared_ptr<LogWriter> log)
    : tutors_(std::move(tutors)), embedder_(std::move(embedder)), llm_(std::move(llm)), log_(std::move(log)) {
  if (!embedder_ || !llm_ || !log_) throw InvalidArgument("chat service requires providers and a log");
}

std::vector<TutorInfo> ChatService::list_tutors() const {
  std::vector<TutorInfo> out;
  out.reserve(tutors_.size());
  for (const auto& t : tutors_) out.push_back({t.config.tutor_id, t.config.display_name});
  return out;
}

std::string ChatService::create_session(const std::string& tutor_id) {
  std::size_t index = tutors_.size();
  for (std::size_t i = 0; i < tutors_.size(); ++i) {
    if (tutors_[i].config.tutor_id == tutor_id) index = i;
  }
  if (index == tutors_.size()) throw NotFound("unknown tutor '" + tutor_id + "'");

  auto session = std::make_shared<Session>();
  session->tutor_index = index;
  session->conversation.conversation_id = new_conversation_id();
  session->conversation.tutor_id = tutor_id;
  session->conversation.created_at = tutor::Clock::now();

  std::unique_lock lock(sessions_mu_);
  std::string token = new_session_token();
  while (sessions_.count(token) != 0) token = new_session_token();
  sessions_.emplace(token, std::move(session));
  return token;
}

std::shared_ptr<ChatService::Session> ChatService::find(const std::string& token) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) throw NotFound("unknown session token");
  return it->second;
}

PostResult ChatService::post_message(const std::string& token, const std::string& question) {
  if (text::trim(question).empty()) throw InvalidArgument("question must not be empty");
  if (utf8_length(question) > kMaxQuestionChars) {
    throw InvalidArgument("question exceeds " + std::to_string(kMaxQuestionChars) + " characters");
  }
  auto session = find(token);

  std::lock_guard lock(session->mu);
  auto& conv = session->conversation;
  const auto& tutor = tutors_[session->tutor_index];
  tutor::MessagePair pair = tutor::handle_message(tutor, conv, question, *embedder_, *llm_);

  // Log order and timestamps must agree even if the wall clock stalls.
  if (conv.pairs.size() >= 2) {
    const auto prev = conv.pairs[conv.pairs.size() - 2].timestamp;
    if (pair.timestamp <= prev) {
      pair.timestamp = prev + std::chrono::microseconds(1);
      conv.pairs.back().timestamp = pair.timestamp;
    }
  }

  const std::size_t index = conv.pairs.size() - 1;
  LogRecord rec;
  rec.conversation_id = conv.conversation_id;
  rec.tutor_id = conv.tutor_id;
  rec.pair_index = index;
  rec.timestamp = format_rfc3339(pair.timestamp);
  rec.question = corpus::scrub_text(pair.question, {});
  rec.response = pair.response;
  rec.retrieved_chunk_ids = pair.retrieved_chunk_ids;
  rec.error_marker = pair.error_marker;
  log_->append(rec);

  return {pair.response, index, pair.error_marker};
}

tutor::Conversation ChatService::conversation(const std::string& token) const {
  auto session = find(token);
  std::lock_guard lock(session->mu);
  return session->conversation;
}

HttpServer::HttpServer(ChatService& service, ServerOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& srv = *server_;

  if (!options_.cors_origin.empty()) {
    srv.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, {{"status", "ok"}});
  });

  srv.Get("/api/tutors", [this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& t : service_.list_tutors()) {
      list.push_back({{"tutor_id", t.tutor_id}, {"display_name", t.display_name}});
    }
    reply_json(res, 200, {{"tutors", list}});
  });

  srv.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    auto tutor_id = string_field(req, res, "tutor_id");
    if (!tutor_id) return;
    try {
      reply_json(res, 201, {{"token", service_.create_session(*tutor_id)}, {"tutor_id", *tutor_id}});
    } catch (const NotFound& e) {
      reply_error(res, 404, e.what());
    }
  });

  srv.Post(R"(/api/sessions/([A-Za-z0-9_\-]+)/messages)",
           [this](const httplib::Request& req, httplib::Response& res) {
             auto question = string_field(req, res, "question");
             if (!question) return;
             try {
               auto result = service_.post_message(req.matches[1], *question);
               json body = {{"response", result.response}, {"pair_index", result.pair_index}};
               if (result.error) {
                 body["error"] = "tutor unavailable";
                 reply_json(res, 502, body);
               } else {
                 reply_json(res, 200, body);
               }
             } catch (const NotFound& e) {
               reply_error(res, 404, e.what());
             } catch (const InvalidArgument& e) {
               reply_error(res, 400, e.what());
             } catch (const IoError& e) {
               reply_error(res, 500, "log write failed");
             }
           });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    reply_error(res, 500, "internal error");
  });
}

void HttpServer::listen() {
  if (!server_->listen(options_.host, options_.port)) {
    throw IoError("cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  }
}

int HttpServer::start_background() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
    if (port < 0) throw IoError("cannot bind " + options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    throw IoError("cannot bind " + options_.host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp = p;
    return (fp.is_relative() ? base / fp : fp).lexically_normal();
  };

  ServiceConfig cfg;
  try {
    if (auto it = j.find("listen"); it != j.end()) {
      cfg.server.host = it->value("host", cfg.server.host);
      cfg.server.port = it->value("port", cfg.server.port);
    }
    cfg.server.cors_origin = j.value("cors_origin", std::string{});
    cfg.tutor_dir = resolve(j.at("tutor_dir").get<std::string>());
    cfg.log_path = resolve(j.at("log_path").get<std::string>());

    const auto& emb = j.at("embedding");
    const std::string kind = emb.value("kind", std::string("local_hash"));
    if (kind == "local_hash") {
      cfg.embedding = embedding::EmbeddingProviderConfig::local(emb.value("dim", std::size_t{256}));
    } else if (kind == "remote") {
      cfg.embedding = embedding::EmbeddingProviderConfig::remote(
          emb.at("base_url").get<std::string>(), emb.at("model").get<std::string>(),
          emb.value("dim", std::size_t{1536}), emb.value("api_key_env", std::string{}));
      cfg.embedding.max_in_flight = emb.value("max_in_flight", cfg.embedding.max_in_flight);
    } else {
      throw ParseError("unknown embedding kind '" + kind + "'");
    }
    cfg.embedding.validate();

    const auto& llm = j.at("llm");
    const std::string llm_kind = llm.value("kind", std::string("remote"));
    if (llm_kind == "remote") {
      cfg.llm_kind = ServiceConfig::LlmKind::remote;
      cfg.remote_llm.base_url = llm.at("base_url").get<std::string>();
      cfg.remote_llm.model = llm.at("model").get<std::string>();
      cfg.remote_llm.api_key_env = llm.value("api_key_env", std::string{});
    } else if (llm_kind == "scripted") {
      cfg.llm_kind = ServiceConfig::LlmKind::scripted;
      cfg.scripted_response = llm.value("default_response", cfg.scripted_response);
    } else {
      throw ParseError("unknown llm kind '" + llm_kind + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return cfg;
}

std::unique_ptr<ChatService> make_service(const ServiceConfig& config) {
  std::shared_ptr<const embedding::EmbeddingProvider> embedder = embedding::make_provider(config.embedding);
  std::vector<tutor::Tutor> tutors;
  for (auto& tc : tutor::load_tutor_configs(config.tutor_dir)) {
    tutors.push_back(tutor::load_tutor(std::move(tc), *embedder));
  }
  std::shared_ptr<llm::ChatProvider> llm;
  if (config.llm_kind == ServiceConfig::LlmKind::remote) {
    llm = std::make_shared<llm::RemoteChatProvider>(config.remote_llm);
  } else {
    llm = std::make_shared<llm::ScriptedProvider>(config.scripted_response);
  }
  auto log = std::make_shared<LogWriter>(config.log_path);
  return std::make_unique<ChatService>(std::move(tutors), std::move(embedder), std::move(llm), std::move(log));
}

}  // namespace ragman::chat
