// Copyright 2026 The Dilemma Harness Authors. All rights reserved.
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

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "dilemma/llm/endpoint.hpp"
#include "dilemma/llm/transport.hpp"

namespace dilemma::llm {

// One provider call attempt. Holds no credentials: the key only ever lives in
// request headers, which are not recorded.
struct ChatExchange {
  std::string provider;
  std::string model_id;
  nlohmann::json request;  // messages, model, temperature
  std::string response_text;
  int http_status = 0;
  std::string error;
  double latency_ms = 0;
  int attempt = 1;
  std::optional<nlohmann::json> usage;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["provider"] = provider;
    j["model"] = model_id;
    j["request"] = nlohmann::ordered_json::parse(request.dump());
    j["response_text"] = response_text;
    j["http_status"] = http_status;
    j["error"] = error;
    j["latency_ms"] = latency_ms;
    j["attempt"] = attempt;
    j["usage"] = usage ? nlohmann::ordered_json::parse(usage->dump()) : nlohmann::ordered_json();
    return j;
  }
};

using ExchangeSink = std::function<void(const ChatExchange&)>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline std::optional<std::string> getenv_lookup(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

struct BackoffPolicy {
  std::chrono::milliseconds base{1000};
  std::chrono::milliseconds cap{30000};

  // Delay before retry number `retry` (1-based): base * 2^(retry-1), capped.
  std::chrono::milliseconds delay(int retry) const {
    auto d = base;
    for (int i = 1; i < retry && d < cap; ++i) d *= 2;
    return std::min(d, cap);
  }
};

struct ProviderReply {
  std::string text;
  std::optional<nlohmann::json> usage;
};

/// Provider wire body (OpenAI-compatible chat completions or Anthropic messages).
inline nlohmann::json build_body(const ModelEndpoint& e, std::string_view system, std::string_view user) {
  nlohmann::json body;
  body["model"] = e.model_id;
  body["temperature"] = e.temperature;
  body["max_tokens"] = e.max_tokens;
  if (e.provider == ProviderKind::kAnthropicStyle) {
    if (!system.empty()) body["system"] = std::string(system);
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", std::string(user)}}});
  } else {
    auto messages = nlohmann::json::array();
    if (!system.empty()) messages.push_back({{"role", "system"}, {"content", std::string(system)}});
    messages.push_back({{"role", "user"}, {"content", std::string(user)}});
    body["messages"] = messages;
  }
  return body;
}

inline HttpRequest build_request(const ModelEndpoint& e, const nlohmann::json& body,
                                 const std::string& api_key) {
  HttpRequest req;
  req.timeout = e.timeout;
  req.body = body.dump();
  if (e.provider == ProviderKind::kAnthropicStyle) {
    req.url = e.base_url + "/v1/messages";
    req.headers = {{"x-api-key", api_key}, {"anthropic-version", "2023-06-01"}};
  } else {
    req.url = e.base_url + "/chat/completions";
    req.headers = {{"Authorization", "Bearer " + api_key}};
  }
  return req;
}

inline ProviderReply parse_provider_reply(ProviderKind provider, const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw GatewayError(GatewayErrc::kMalformedResponse, "response body is not a JSON object");
  }
  ProviderReply out;
  if (auto u = j.find("usage"); u != j.end()) out.usage = *u;
  if (provider == ProviderKind::kAnthropicStyle) {
    const auto content = j.find("content");
    if (content == j.end() || !content->is_array()) {
      throw GatewayError(GatewayErrc::kMalformedResponse, "missing content blocks");
    }
    bool any = false;
    for (const auto& block : *content) {
      if (block.value("type", "") == "text" && block.contains("text") && block["text"].is_string()) {
        out.text += block["text"].get<std::string>();
        any = true;
      }
    }
    if (!any) throw GatewayError(GatewayErrc::kMalformedResponse, "no text content block");
    return out;
  }
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw GatewayError(GatewayErrc::kMalformedResponse, "missing choices");
  }
  const auto& msg = (*choices)[0].value("message", nlohmann::json::object());
  if (!msg.contains("content") || !msg["content"].is_string()) {
    throw GatewayError(GatewayErrc::kMalformedResponse, "missing message content");
  }
  out.text = msg["content"].get<std::string>();
  return out;
}

inline bool is_transient(const HttpResponse& r) {
  return r.status == 0 || r.status == 429 || (r.status >= 500 && r.status < 600);
}

class ChatClient {
 public:
  struct Options {
    std::shared_ptr<Transport> transport;
    ExchangeSink on_exchange;
    EnvLookup env = getenv_lookup;
    Sleeper sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    BackoffPolicy backoff;
  };

  explicit ChatClient(ModelEndpoint endpoint) : ChatClient(std::move(endpoint), Options{}) {}

  ChatClient(ModelEndpoint endpoint, Options options)
      : endpoint_(std::move(endpoint)), options_(std::move(options)) {
    endpoint_.validate();
    if (!options_.transport) options_.transport = std::make_shared<HttplibTransport>();
  }

  const ModelEndpoint& endpoint() const { return endpoint_; }

  /// Fails with kAuthConfig if the key variable is unset; does not touch the network.
  std::string api_key() const {
    auto key = options_.env(endpoint_.api_key_env);
    if (!key) {
      throw GatewayError(GatewayErrc::kAuthConfig,
                         "environment variable " + endpoint_.api_key_env + " is not set");
    }
    return *key;
  }

  std::string complete(std::string_view system, std::string_view user) const {
    const nlohmann::json body = build_body(endpoint_, system, user);
    nlohmann::json logged = body;
    logged.erase("max_tokens");

    if (!endpoint_.live()) {
      ChatExchange ex{std::string(to_string(endpoint_.provider)), endpoint_.model_id, logged};
      try {
        ex.response_text = endpoint_.mock->next(system, user);
      } catch (const GatewayError& e) {
        ex.error = e.what();
        emit(ex);
        throw;
      }
      ex.http_status = 200;
      emit(ex);
      return ex.response_text;
    }

    const HttpRequest request = build_request(endpoint_, body, api_key());
    const int attempts = 1 + endpoint_.max_retries;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      if (attempt > 1) options_.sleep(options_.backoff.delay(attempt - 1));
      ChatExchange ex{std::string(to_string(endpoint_.provider)), endpoint_.model_id, logged};
      ex.attempt = attempt;

      const auto start = std::chrono::steady_clock::now();
      HttpResponse response;
      {
        CountingGate::Permit permit(*endpoint_.gate);
        response = options_.transport->post(request);
      }
      ex.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      ex.http_status = response.status;

      if (response.status == 200) {
        try {
          ProviderReply reply = parse_provider_reply(endpoint_.provider, response.body);
          ex.response_text = reply.text;
          ex.usage = std::move(reply.usage);
          emit(ex);
          return ex.response_text;
        } catch (const GatewayError& e) {
          ex.error = e.what();
          emit(ex);
          throw;
        }
      }
      ex.error = response.status == 0 ? response.transport_error : "HTTP " + std::to_string(response.status);
      emit(ex);
      if (response.status == 401 || response.status == 403) {
        throw GatewayError(GatewayErrc::kAuth, endpoint_.model_id + " rejected credentials (" +
                                                   std::to_string(response.status) + ")");
      }
      if (!is_transient(response)) {
        throw GatewayError(GatewayErrc::kHttp, endpoint_.model_id + " returned " + ex.error);
      }
      last_error = ex.error;
    }
    throw GatewayError(GatewayErrc::kRetriesExhausted,
                       endpoint_.model_id + " failed after " + std::to_string(attempts) +
                           " attempts; last error: " + last_error);
  }

 private:
  void emit(const ChatExchange& ex) const {
    if (options_.on_exchange) options_.on_exchange(ex);
  }

  ModelEndpoint endpoint_;
  Options options_;
};

inline std::string chat_complete(const ModelEndpoint& endpoint, std::string_view system,
                                 std::string_view user) {
  return ChatClient(endpoint).complete(system, user);
}

}  // namespace dilemma::llm
