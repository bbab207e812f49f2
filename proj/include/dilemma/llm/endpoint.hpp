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

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dilemma::llm {

enum class GatewayErrc {
  kConfig,
  kAuthConfig,  // key variable missing; raised before any network call
  kAuth,        // provider rejected the key (401/403); never retried
  kHttp,        // other non-retryable HTTP status
  kRetriesExhausted,
  kMalformedResponse,
  kMockExhausted,
};

inline std::string_view to_string(GatewayErrc e) {
  switch (e) {
    case GatewayErrc::kConfig: return "config";
    case GatewayErrc::kAuthConfig: return "auth_config";
    case GatewayErrc::kAuth: return "auth";
    case GatewayErrc::kHttp: return "http";
    case GatewayErrc::kRetriesExhausted: return "retries_exhausted";
    case GatewayErrc::kMalformedResponse: return "malformed_response";
    case GatewayErrc::kMockExhausted: return "mock_exhausted";
  }
  return "unknown";
}

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  GatewayErrc code() const noexcept { return code_; }

 private:
  GatewayErrc code_;
};

// Bounds in-flight requests for one endpoint across every client sharing it.
class CountingGate {
 public:
  explicit CountingGate(int capacity) : available_(capacity < 1 ? 1 : capacity) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

  class Permit {
   public:
    explicit Permit(CountingGate& g) : gate_(&g) { gate_->acquire(); }
    ~Permit() { gate_->release(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    CountingGate* gate_;
  };

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

/// Generates mock replies: (call index, system text, user text) -> reply.
using MockGenerator = std::function<std::string(std::size_t, std::string_view, std::string_view)>;

// Deterministic stand-in for a provider: a fixed schedule or a generator.
class MockScript {
 public:
  MockScript(std::string agent_id, std::vector<std::string> schedule)
      : agent_id_(std::move(agent_id)), schedule_(std::move(schedule)) {
    if (schedule_.empty()) {
      throw GatewayError(GatewayErrc::kConfig, "mock script for '" + agent_id_ + "' is empty");
    }
  }
  MockScript(std::string agent_id, MockGenerator generator)
      : agent_id_(std::move(agent_id)), generator_(std::move(generator)) {
    if (!generator_) throw GatewayError(GatewayErrc::kConfig, "mock generator is empty");
  }

  const std::string& agent_id() const { return agent_id_; }

  std::string next(std::string_view system, std::string_view user) {
    std::lock_guard lock(mu_);
    const std::size_t index = calls_++;
    if (generator_) return generator_(index, system, user);
    if (index >= schedule_.size()) {
      throw GatewayError(GatewayErrc::kMockExhausted,
                         "mock script for '" + agent_id_ + "' exhausted after " +
                             std::to_string(schedule_.size()) + " replies");
    }
    return schedule_[index];
  }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  std::string agent_id_;
  std::vector<std::string> schedule_;
  MockGenerator generator_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

enum class ProviderKind { kOpenAICompatible, kAnthropicStyle, kMock };

inline std::string_view to_string(ProviderKind p) {
  switch (p) {
    case ProviderKind::kOpenAICompatible: return "openai";
    case ProviderKind::kAnthropicStyle: return "anthropic";
    case ProviderKind::kMock: return "mock";
  }
  return "?";
}

inline ProviderKind provider_from_name(std::string_view name) {
  if (name == "openai") return ProviderKind::kOpenAICompatible;
  if (name == "anthropic") return ProviderKind::kAnthropicStyle;
  if (name == "mock") return ProviderKind::kMock;
  throw GatewayError(GatewayErrc::kConfig, "unknown provider '" + std::string(name) + "'");
}

inline constexpr std::string_view kDeepInfraBaseUrl = "https://api.deepinfra.com/v1/openai";
inline constexpr std::string_view kAnthropicBaseUrl = "https://api.anthropic.com";

struct ModelEndpoint {
  ProviderKind provider = ProviderKind::kMock;
  std::string base_url;
  std::string model_id;
  std::string api_key_env;  // name of the variable, never the key itself
  double temperature = 0.7;
  int max_tokens = 2048;
  std::chrono::seconds timeout{120};
  int max_retries = 3;
  int max_in_flight = 4;

  std::shared_ptr<CountingGate> gate = std::make_shared<CountingGate>(4);
  std::shared_ptr<MockScript> mock;  // kMock only

  bool live() const { return provider != ProviderKind::kMock; }

  void validate() const {
    if (temperature < 0) throw GatewayError(GatewayErrc::kConfig, "temperature must be >= 0");
    if (max_tokens < 1) throw GatewayError(GatewayErrc::kConfig, "max_tokens must be >= 1");
    if (max_retries < 0) throw GatewayError(GatewayErrc::kConfig, "max_retries must be >= 0");
    if (live() && (base_url.empty() || model_id.empty() || api_key_env.empty())) {
      throw GatewayError(GatewayErrc::kConfig, "live endpoint needs base_url, model and api_key_env");
    }
    if (!live() && !mock) throw GatewayError(GatewayErrc::kConfig, "mock endpoint has no script");
  }

  static ModelEndpoint deepinfra(std::string model, std::string key_env = "DEEPINFRA_API_KEY") {
    ModelEndpoint e;
    e.provider = ProviderKind::kOpenAICompatible;
    e.base_url = std::string(kDeepInfraBaseUrl);
    e.model_id = std::move(model);
    e.api_key_env = std::move(key_env);
    return e;
  }

  static ModelEndpoint anthropic(std::string model, std::string key_env = "ANTHROPIC_API_KEY") {
    ModelEndpoint e;
    e.provider = ProviderKind::kAnthropicStyle;
    e.base_url = std::string(kAnthropicBaseUrl);
    e.model_id = std::move(model);
    e.api_key_env = std::move(key_env);
    e.max_tokens = 1024;
    return e;
  }

  nlohmann::json to_json() const {
    return {{"provider", std::string(to_string(provider))},
            {"base_url", base_url},
            {"model", model_id},
            {"api_key_env", api_key_env},
            {"temperature", temperature},
            {"max_tokens", max_tokens},
            {"timeout_s", timeout.count()},
            {"max_retries", max_retries},
            {"max_in_flight", max_in_flight}};
  }

  static ModelEndpoint from_json(const nlohmann::json& j) {
    ModelEndpoint e;
    e.provider = provider_from_name(j.value("provider", "openai"));
    if (e.provider == ProviderKind::kAnthropicStyle) {
      e.base_url = std::string(kAnthropicBaseUrl);
      e.max_tokens = 1024;
    } else if (e.provider == ProviderKind::kOpenAICompatible) {
      e.base_url = std::string(kDeepInfraBaseUrl);
    }
    e.base_url = j.value("base_url", e.base_url);
    e.model_id = j.value("model", "");
    e.api_key_env = j.value("api_key_env", "");
    e.temperature = j.value("temperature", e.temperature);
    e.max_tokens = j.value("max_tokens", e.max_tokens);
    e.timeout = std::chrono::seconds(j.value("timeout_s", 120));
    e.max_retries = j.value("max_retries", e.max_retries);
    e.max_in_flight = j.value("max_in_flight", e.max_in_flight);
    e.gate = std::make_shared<CountingGate>(e.max_in_flight);
    return e;
  }
};

/// Mock endpoint replaying `schedule` in order; running past the end is an error.
inline ModelEndpoint mock_script(std::string agent_id, std::vector<std::string> schedule) {
  ModelEndpoint e;
  e.provider = ProviderKind::kMock;
  e.model_id = "mock:" + agent_id;
  e.mock = std::make_shared<MockScript>(std::move(agent_id), std::move(schedule));
  return e;
}

inline ModelEndpoint mock_script(std::string agent_id, MockGenerator generator) {
  ModelEndpoint e;
  e.provider = ProviderKind::kMock;
  e.model_id = "mock:" + agent_id;
  e.mock = std::make_shared<MockScript>(std::move(agent_id), std::move(generator));
  return e;
}

}  // namespace dilemma::llm
