// Copyright 2026 The migkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "migkit/chat_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "migkit/error.hpp"

namespace migkit {

void ModelEndpoint::validate() const {
  if (max_concurrency < 1) throw ConfigError("endpoint max concurrency must be >= 1");
  if (!(timeout_s > 0)) throw ConfigError("endpoint timeout must be > 0");
  if (max_attempts < 1) throw ConfigError("endpoint max attempts must be >= 1");
  if (backoff_initial_s < 0) throw ConfigError("endpoint backoff must be >= 0");
  if (base_url.empty()) throw ConfigError("endpoint base URL is empty");
}

std::string token_from_env() {
  for (const char* name : {"MIGKIT_API_KEY", "OPENAI_API_KEY"}) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') return v;
  }
  return {};
}

void Semaphore::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return count_ > 0; });
  --count_;
}

void Semaphore::release() {
  {
    std::lock_guard lock(mu_);
    ++count_;
  }
  cv_.notify_one();
}

namespace {

struct SemaphoreGuard {
  explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
  ~SemaphoreGuard() { sem.release(); }
  Semaphore& sem;
};

}  // namespace

std::string extract_reply_text(const Json& body) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty()) {
    throw TransportError("chat response has no choices");
  }
  const Json& msg = body["choices"][0].value("message", Json::object());
  const Json content = msg.value("content", Json(nullptr));
  if (content.is_string()) return content.get<std::string>();
  std::string text;
  if (content.is_array()) {
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text") {
        text += part.value("text", "");
      }
    }
  }
  return text;
}

HttpChatClient::HttpChatClient(ModelEndpoint endpoint)
    : endpoint_(std::move(endpoint)), in_flight_(endpoint_.max_concurrency) {
  endpoint_.validate();
  const std::string& url = endpoint_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix.ends_with("/chat/completions") ? prefix : prefix + "/chat/completions";
}

ChatReply HttpChatClient::complete(const Json& payload) {
  Json body = payload;
  if (!body.contains("model")) body["model"] = endpoint_.model;
  if (!body.contains("temperature")) body["temperature"] = 0;
  if (endpoint_.max_tokens > 0 && !body.contains("max_tokens")) {
    body["max_tokens"] = endpoint_.max_tokens;
  }
  const std::string data = body.dump();

  httplib::Headers headers;
  if (!endpoint_.token.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint_.token);
  }

  const auto secs = static_cast<time_t>(endpoint_.timeout_s);
  const auto usecs =
      static_cast<time_t>((endpoint_.timeout_s - std::floor(endpoint_.timeout_s)) * 1e6);

  std::string last_error;
  for (int attempt = 1; attempt <= endpoint_.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double wait = endpoint_.backoff_initial_s * std::pow(2.0, attempt - 2);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    httplib::Client cli(origin_);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);

    const auto start = std::chrono::steady_clock::now();
    httplib::Result res = [&] {
      SemaphoreGuard guard(in_flight_);
      return cli.Post(path_, headers, data, "application/json");
    }();
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status >= 400 && status < 500 && status != 408 && status != 429) {
      throw ConfigError("endpoint rejected request with HTTP " + std::to_string(status) +
                        ": " + res->body.substr(0, 512));
    }
    if (status < 200 || status >= 300) {
      last_error = "HTTP " + std::to_string(status);
      continue;
    }
    try {
      return ChatReply{extract_reply_text(Json::parse(res->body)), ms};
    } catch (const Json::exception& e) {
      last_error = std::string("unparseable response body: ") + e.what();
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("request to " + origin_ + path_ + " failed after " +
                       std::to_string(endpoint_.max_attempts) + " attempts: " + last_error);
}

}  // namespace migkit
