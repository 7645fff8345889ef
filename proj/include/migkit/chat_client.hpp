// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <string>

#include "json.hpp"

namespace migkit {

using Json = nlohmann::json;

/// An OpenAI-compatible chat-completions endpoint.
struct ModelEndpoint {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model = "default";
  std::string token;              // sent as a Bearer token when non-empty
  double timeout_s = 120.0;
  int max_attempts = 3;           // total tries per request
  double backoff_initial_s = 1.0; // doubled after each failed attempt
  std::size_t max_concurrency = 4;
  int max_tokens = 0;             // 0: leave to the server

  /// Throws ConfigError when concurrency < 1, timeout <= 0 or attempts < 1.
  void validate() const;
};

/// Token from MIGKIT_API_KEY, falling back to OPENAI_API_KEY.
std::string token_from_env();

struct ChatReply {
  std::string content;
  double latency_ms = 0;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;

  /// Sends one chat-completions payload (model/temperature are filled in by
  /// the client) and returns the first choice's text.
  /// Throws TransportError after exhausting retries, ConfigError when the
  /// server rejects the request as malformed (HTTP 4xx other than 408/429).
  virtual ChatReply complete(const Json& payload) = 0;
};

/// Minimal counting semaphore with a runtime bound.
class Semaphore {
 public:
  explicit Semaphore(std::size_t count) : count_(count) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t count_;
};

class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(ModelEndpoint endpoint);

  ChatReply complete(const Json& payload) override;

  const ModelEndpoint& endpoint() const { return endpoint_; }

 private:
  ModelEndpoint endpoint_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // .../chat/completions
  Semaphore in_flight_;
};

/// First choice's message content; array-of-parts content is concatenated.
/// Throws TransportError when the body has no choices.
std::string extract_reply_text(const Json& body);

}  // namespace migkit
