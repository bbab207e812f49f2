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

#include <gtest/gtest.h>

#include <deque>

#include "dilemma/llm/client.hpp"

namespace dilemma::llm {
namespace {

class FakeTransport final : public Transport {
 public:
  explicit FakeTransport(std::deque<HttpResponse> replies) : replies_(std::move(replies)) {}

  HttpResponse post(const HttpRequest& request) override {
    requests.push_back(request);
    if (replies_.empty()) return {0, "", "no scripted reply"};
    auto r = replies_.front();
    replies_.pop_front();
    return r;
  }

  std::vector<HttpRequest> requests;

 private:
  std::deque<HttpResponse> replies_;
};

std::string openai_body(const std::string& text) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
                        {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 3}}}}
      .dump();
}

struct Harness {
  std::shared_ptr<FakeTransport> transport;
  std::vector<ChatExchange> exchanges;
  std::vector<std::chrono::milliseconds> sleeps;
  std::map<std::string, std::string> env{{"DEEPINFRA_API_KEY", "sk-secret-123"},
                                         {"ANTHROPIC_API_KEY", "ak-secret-456"}};

  ChatClient::Options options() {
    ChatClient::Options o;
    o.transport = transport;
    o.on_exchange = [this](const ChatExchange& e) { exchanges.push_back(e); };
    o.sleep = [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
    o.env = [this](const std::string& k) -> std::optional<std::string> {
      auto it = env.find(k);
      if (it == env.end()) return std::nullopt;
      return it->second;
    };
    return o;
  }
};

TEST(MockScript, ReplaysScheduleInOrder) {
  Harness h;
  h.transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{});
  ChatClient c(mock_script("a1", {"one", "two", "three"}), h.options());
  EXPECT_EQ(c.complete("", "p"), "one");
  EXPECT_EQ(c.complete("", "p"), "two");
  EXPECT_EQ(c.complete("", "p"), "three");
  EXPECT_TRUE(h.transport->requests.empty());
  ASSERT_EQ(h.exchanges.size(), 3u);
  EXPECT_EQ(h.exchanges[1].response_text, "two");
  EXPECT_EQ(h.exchanges[1].provider, "mock");
  EXPECT_EQ(h.exchanges[1].latency_ms, 0);
}

TEST(MockScript, ExhaustionAndEmptyScheduleAreErrors) {
  EXPECT_THROW(
      {
        try {
          mock_script("a", std::vector<std::string>{});
        } catch (const GatewayError& e) {
          EXPECT_EQ(e.code(), GatewayErrc::kConfig);
          throw;
        }
      },
      GatewayError);
  ChatClient c(mock_script("a", {"only"}));
  c.complete("", "x");
  try {
    c.complete("", "x");
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.code(), GatewayErrc::kMockExhausted);
  }
}

TEST(MockScript, GeneratorSeesIndexAndPrompt) {
  ChatClient c(mock_script("g", [](std::size_t i, std::string_view, std::string_view user) {
    return std::to_string(i) + ":" + std::string(user);
  }));
  EXPECT_EQ(c.complete("", "hi"), "0:hi");
  EXPECT_EQ(c.complete("", "yo"), "1:yo");
}

TEST(ChatClient, RetriesTransientStatusThenSucceeds) {
  Harness h;
  h.transport = std::make_shared<FakeTransport>(
      std::deque<HttpResponse>{{429, "slow down", ""}, {200, openai_body("ok"), ""}});
  ChatClient c(ModelEndpoint::deepinfra("meta-llama/Meta-Llama-3.1-70B-Instruct"), h.options());
  EXPECT_EQ(c.complete("", "prompt"), "ok");
  ASSERT_EQ(h.exchanges.size(), 2u);
  EXPECT_EQ(h.exchanges[0].http_status, 429);
  EXPECT_EQ(h.exchanges[1].attempt, 2);
  EXPECT_EQ(h.exchanges[1].usage->at("completion_tokens"), 3);
  ASSERT_EQ(h.sleeps.size(), 1u);
  EXPECT_EQ(h.sleeps[0], std::chrono::milliseconds(1000));
}

TEST(ChatClient, OpenAIRequestShape) {
  Harness h;
  h.transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{{200, openai_body("x"), ""}});
  ChatClient c(ModelEndpoint::deepinfra("Qwen/Qwen2.5-72B-Instruct"), h.options());
  c.complete("sys", "user text");
  const auto& req = h.transport->requests.at(0);
  EXPECT_EQ(req.url, "https://api.deepinfra.com/v1/openai/chat/completions");
  const auto body = nlohmann::json::parse(req.body);
  EXPECT_EQ(body["model"], "Qwen/Qwen2.5-72B-Instruct");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(body["max_tokens"], 2048);
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "user text");
  EXPECT_EQ(req.headers.at(0).second, "Bearer sk-secret-123");
}

TEST(ChatClient, AnthropicRequestAndReplyShape) {
  Harness h;
  const std::string reply = R"({"content":[{"type":"text","text":"Lesson from X: "},{"type":"text","text":"be kind"}]})";
  h.transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{{200, reply, ""}});
  ChatClient c(ModelEndpoint::anthropic("claude-opus-4-1-20250805"), h.options());
  EXPECT_EQ(c.complete("", "make a lesson"), "Lesson from X: be kind");
  const auto& req = h.transport->requests.at(0);
  EXPECT_EQ(req.url, "https://api.anthropic.com/v1/messages");
  const auto body = nlohmann::json::parse(req.body);
  EXPECT_EQ(body["max_tokens"], 1024);
  EXPECT_FALSE(body.contains("system"));
  EXPECT_EQ(body["messages"][0]["role"], "user");
}

TEST(ChatClient, MissingKeyFailsBeforeAnyNetworkCall) {
  Harness h;
  h.env.clear();
  h.transport = std::make_shared<FakeTransport>(std::deque<HttpResponse>{{200, openai_body("x"), ""}});
  ChatClient c(ModelEndpoint::deepinfra("m"), h.options());
  try {
    c.complete("", "p");
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.code(), GatewayErrc::kAuthConfig);
    EXPECT_NE(std::string(e.what()).find("DEEPINFRA_API_KEY"), std::string::npos);
  }
  EXPECT_TRUE(h.transport->requests.empty());
}

TEST(ChatClient, AuthRejectionIsNotRetried) {
  Harness h;
  h.transport = std::make_shared<FakeTransport>(
      std::deque<HttpResponse>{{401, "bad key", ""}, {200, openai_body("x"), ""}});
  ChatClient c(ModelEndpoint::deepinfra("m"), h.options());
  try {
    c.complete("", "p");
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.code(), GatewayErrc::kAuth);
  }
  EXPECT_EQ(h.transport->requests.size(), 1u);
}

TEST(ChatClient, ExhaustsRetriesWithNonDecreasingBackoff) {
  Harness h;
  std::deque<HttpResponse> replies;
  for (int i = 0; i < 10; ++i) replies.push_back({i % 2 ? 503 : 0, "", "timeout"});
  h.transport = std::make_shared<FakeTransport>(replies);
  auto ep = ModelEndpoint::deepinfra("m");
  ep.max_retries = 6;
  ChatClient c(ep, h.options());
  try {
    c.complete("", "p");
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.code(), GatewayErrc::kRetriesExhausted);
  }
  EXPECT_EQ(h.transport->requests.size(), 7u);
  ASSERT_EQ(h.sleeps.size(), 6u);
  for (std::size_t i = 1; i < h.sleeps.size(); ++i) EXPECT_GE(h.sleeps[i], h.sleeps[i - 1]);
  EXPECT_EQ(h.sleeps.back(), std::chrono::milliseconds(30000));
}

TEST(ChatClient, OtherClientErrorIsFatalAndMalformedBodyIsReported) {
  Harness h;
  h.transport = std::make_shared<FakeTransport>(
      std::deque<HttpResponse>{{400, "bad", ""}, {200, "{\"choices\":[]}", ""}});
  ChatClient c(ModelEndpoint::deepinfra("m"), h.options());
  try {
    c.complete("", "p");
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.code(), GatewayErrc::kHttp);
  }
  try {
    c.complete("", "p");
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.code(), GatewayErrc::kMalformedResponse);
  }
}

TEST(ChatClient, KeyNeverAppearsInLoggedExchanges) {
  Harness h;
  h.transport = std::make_shared<FakeTransport>(
      std::deque<HttpResponse>{{500, "", ""}, {200, openai_body("fine"), ""}});
  ChatClient c(ModelEndpoint::deepinfra("m"), h.options());
  c.complete("system", "user");
  std::string logged;
  for (const auto& e : h.exchanges) logged += e.to_json().dump();
  EXPECT_EQ(logged.find("sk-secret-123"), std::string::npos);
  EXPECT_EQ(ModelEndpoint::deepinfra("m").to_json().dump().find("sk-secret"), std::string::npos);
}

TEST(Endpoint, JsonRoundTripAndValidation) {
  auto e = ModelEndpoint::from_json({{"provider", "anthropic"}, {"model", "claude"}, {"api_key_env", "K"}});
  EXPECT_EQ(e.base_url, "https://api.anthropic.com");
  EXPECT_EQ(e.max_tokens, 1024);
  auto back = ModelEndpoint::from_json(e.to_json());
  EXPECT_EQ(back.to_json(), e.to_json());
  EXPECT_THROW(ModelEndpoint::from_json({{"provider", "carrier-pigeon"}}), GatewayError);
  auto bad = ModelEndpoint::deepinfra("m");
  bad.temperature = -1;
  EXPECT_THROW(bad.validate(), GatewayError);
}

TEST(Backoff, DoublesFromOneSecondAndCaps) {
  BackoffPolicy p;
  EXPECT_EQ(p.delay(1).count(), 1000);
  EXPECT_EQ(p.delay(2).count(), 2000);
  EXPECT_EQ(p.delay(5).count(), 16000);
  EXPECT_EQ(p.delay(6).count(), 30000);
  EXPECT_EQ(p.delay(40).count(), 30000);
}

TEST(Transport, SplitUrl) {
  EXPECT_EQ(split_url("https://api.x.com/v1/messages"),
            (std::pair<std::string, std::string>{"https://api.x.com", "/v1/messages"}));
  EXPECT_EQ(split_url("http://localhost:8080").second, "/");
}

}  // namespace
}  // namespace dilemma::llm
