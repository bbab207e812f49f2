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

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dilemma/agent/action_parser.hpp"
#include "dilemma/agent/strategies.hpp"
#include "dilemma/llm/client.hpp"

namespace dilemma::orchestrator {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AgentReply {
  std::string text;
  std::vector<llm::ChatExchange> calls;  // empty for scripted agents
  std::optional<std::string> error;     // gateway failure; the game aborts
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual const std::string& id() const = 0;
  virtual const std::string& family() const = 0;
  virtual AgentReply respond(const Observation& obs, const std::string& prompt) = 0;
};

// ------------------------------------------------------------------ scripted

struct ScriptedPlan {
  StrategySpec binary = StrategySpec::tit_for_tat();
  StrategySpec contribute = StrategySpec::match_mean_contribution();
  StrategySpec punish = StrategySpec::no_punish();

  const StrategySpec& for_phase(Phase p) const {
    if (p == Phase::kContribute) return contribute;
    if (p == Phase::kPunish) return punish;
    return binary;
  }
};

// Replies with the same JSON shape a model is asked for, so scripted games go
// through the parser like everyone else.
class ScriptedAgent final : public Agent {
 public:
  ScriptedAgent(std::string id, std::string family, ScriptedPlan plan, std::uint64_t seed)
      : id_(std::move(id)), family_(std::move(family)), plan_(std::move(plan)), rng_(seed) {}

  const std::string& id() const override { return id_; }
  const std::string& family() const override { return family_; }

  AgentReply respond(const Observation& obs, const std::string&) override {
    const StrategySpec& s = plan_.for_phase(obs.phase);
    return {serialize_action(scripted_decide(s, obs, rng_), "scripted:" + s.name()), {}, std::nullopt};
  }

 private:
  std::string id_;
  std::string family_;
  ScriptedPlan plan_;
  Rng rng_;
};

// ---------------------------------------------------------------- mock model

struct MockPolicy {
  double cooperation = 0.5;  // baseline propensity
  bool garbage = false;      // reply with text that never parses
};

inline constexpr std::string_view kGarbageReply = "I would rather not commit to a move this round.";

namespace detail {

inline double others_share(const Observation& obs, const RoundRecord& r) {
  double num = 0;
  double den = 0;
  if (is_pgg_family(obs.spec.kind)) {
    const PhaseActions* pa = r.find_phase(Phase::kContribute);
    if (pa == nullptr) return 0.5;
    for (std::size_t i = 0; i < pa->actions.size(); ++i) {
      if (static_cast<int>(i) == obs.player) continue;
      num += std::get<Contribution>(pa->actions[i]).amount;
      den += obs.spec.endowment;
    }
  } else {
    const PhaseActions* pa = r.find_phase(Phase::kAct);
    if (pa == nullptr) return 0.5;
    for (std::size_t i = 0; i < pa->actions.size(); ++i) {
      if (static_cast<int>(i) == obs.player) continue;
      num += is_cooperative(std::get<Choice>(pa->actions[i])) ? 1 : 0;
      den += 1;
    }
  }
  return den == 0 ? 0.5 : num / den;
}

inline double words_share(const Observation& obs) {
  double stag = 0;
  double n = 0;
  for (std::size_t i = 0; i < obs.broadcast_words.size(); ++i) {
    if (static_cast<int>(i) == obs.player) continue;
    stag += text::to_lower(obs.broadcast_words[i]) == "stag" ? 1 : 0;
    n += 1;
  }
  return n == 0 ? 0.5 : stag / n;
}

}  // namespace detail

/// Reciprocating stand-in for a model: starts at its propensity, then moves
/// halfway toward what the others did last round (or announced this round).
inline ActionRecord mock_decide(const MockPolicy& policy, const Observation& obs, Rng& rng) {
  double p = policy.cooperation;
  if (!obs.history.empty()) p = 0.5 * p + 0.5 * detail::others_share(obs, obs.history.back());
  switch (obs.phase) {
    case Phase::kCommunicate:
      return Word{rng.bernoulli(p) ? "stag" : "hare"};
    case Phase::kAct: {
      if (!obs.broadcast_words.empty()) p = 0.5 * p + 0.5 * detail::words_share(obs);
      const bool coop = rng.bernoulli(p);
      if (is_stag_family(obs.spec.kind)) return coop ? Choice::kHuntStag : Choice::kHuntHare;
      return coop ? Choice::kCooperate : Choice::kDefect;
    }
    case Phase::kContribute: {
      int amount = 0;
      for (int i = 0; i < obs.spec.endowment; ++i) amount += rng.bernoulli(p) ? 1 : 0;
      return Contribution{amount};
    }
    case Phase::kPunish: {
      PunishmentAllocation alloc;
      const auto c = dilemma::detail::contributions_of(*obs.current);
      int sum = 0;
      for (int x : c) sum += x;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (static_cast<int>(i) == obs.player) continue;
        if (c[i] * static_cast<int>(c.size()) < sum && rng.bernoulli(policy.cooperation)) {
          alloc.spends[static_cast<int>(i)] = 1;
        }
      }
      return alloc;
    }
  }
  return Contribution{0};
}

inline std::string mock_reply_text(const MockPolicy& policy, const Observation& obs, Rng& rng) {
  if (policy.garbage) return std::string(kGarbageReply);
  const ActionRecord action = mock_decide(policy, obs, rng);
  return "Let me think about round " + std::to_string(obs.round_index) + " step by step.\n```json\n" +
         serialize_action(action, "mock reasoning, propensity " + text::fixed(policy.cooperation, 2)) +
         "\n```";
}

// Shared between a model agent and its mock generator: the generator needs the
// observation, which the chat interface does not carry.
struct MockContext {
  MockPolicy policy;
  Rng rng;
  const Observation* current = nullptr;
};

inline llm::ModelEndpoint mock_endpoint(const std::string& agent_id, std::shared_ptr<MockContext> ctx) {
  return llm::mock_script(agent_id, [ctx](std::size_t, std::string_view, std::string_view) {
    if (ctx->current == nullptr) throw std::logic_error("mock agent called without an observation");
    return mock_reply_text(ctx->policy, *ctx->current, ctx->rng);
  });
}

// ------------------------------------------------------------------- model

// Prompt goes out as a single user message; provider-level retries and
// exchange records come from the gateway.
class ModelAgent final : public Agent {
 public:
  ModelAgent(std::string id, std::string family, llm::ModelEndpoint endpoint,
             llm::ChatClient::Options options = {}, std::shared_ptr<MockContext> mock = nullptr)
      : id_(std::move(id)),
        family_(std::move(family)),
        calls_(std::make_shared<std::vector<llm::ChatExchange>>()),
        mock_(std::move(mock)),
        client_(std::move(endpoint), with_recorder(std::move(options), calls_)) {}

  const std::string& id() const override { return id_; }
  const std::string& family() const override { return family_; }
  const llm::ModelEndpoint& endpoint() const { return client_.endpoint(); }

  AgentReply respond(const Observation& obs, const std::string& prompt) override {
    calls_->clear();
    if (mock_) mock_->current = &obs;
    AgentReply reply;
    try {
      reply.text = client_.complete("", prompt);
    } catch (const llm::GatewayError& e) {
      reply.error = e.what();
    }
    if (mock_) mock_->current = nullptr;
    reply.calls = std::move(*calls_);
    calls_->clear();
    return reply;
  }

 private:
  static llm::ChatClient::Options with_recorder(llm::ChatClient::Options o,
                                                std::shared_ptr<std::vector<llm::ChatExchange>> calls) {
    auto downstream = o.on_exchange;
    o.on_exchange = [calls, downstream](const llm::ChatExchange& e) {
      calls->push_back(e);
      if (downstream) downstream(e);
    };
    return o;
  }

  std::string id_;
  std::string family_;
  std::shared_ptr<std::vector<llm::ChatExchange>> calls_;
  std::shared_ptr<MockContext> mock_;
  llm::ChatClient client_;
};

// ------------------------------------------------------------- pool config

enum class AgentKind { kLlm, kScripted, kMock };

inline std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::kLlm: return "llm";
    case AgentKind::kScripted: return "scripted";
    case AgentKind::kMock: return "mock";
  }
  return "?";
}

enum class RunMode { kMock, kLive };

struct AgentSpec {
  std::string id;
  std::string family;
  AgentKind kind = AgentKind::kMock;
  std::optional<llm::ModelEndpoint> endpoint;  // kLlm
  ScriptedPlan plan;                           // kScripted
  MockPolicy mock;                             // kMock, and kLlm under --mock
  std::vector<int> garbage_trials;             // 0-based trial indices that reply garbage

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j{{"id", id}, {"family", family}, {"kind", std::string(to_string(kind))}};
    if (endpoint) j["endpoint"] = nlohmann::ordered_json::parse(endpoint->to_json().dump());
    if (kind == AgentKind::kScripted) {
      j["binary"] = nlohmann::ordered_json::parse(plan.binary.to_json().dump());
      j["contribute"] = nlohmann::ordered_json::parse(plan.contribute.to_json().dump());
      j["punish"] = nlohmann::ordered_json::parse(plan.punish.to_json().dump());
    } else {
      j["cooperation"] = mock.cooperation;
      if (mock.garbage) j["garbage"] = true;
      if (!garbage_trials.empty()) j["garbage_trials"] = garbage_trials;
    }
    return j;
  }

  static AgentSpec from_json(const nlohmann::json& j) {
    AgentSpec a;
    try {
      a.id = j.at("id").get<std::string>();
      a.family = j.value("family", a.id);
      const std::string kind = j.value("kind", "llm");
      if (kind == "llm") {
        a.kind = AgentKind::kLlm;
        if (!j.contains("endpoint")) throw ConfigError("agent '" + a.id + "' of kind llm needs an endpoint");
        a.endpoint = llm::ModelEndpoint::from_json(j.at("endpoint"));
      } else if (kind == "scripted") {
        a.kind = AgentKind::kScripted;
        if (j.contains("binary")) a.plan.binary = StrategySpec::from_json(j["binary"]);
        if (j.contains("contribute")) a.plan.contribute = StrategySpec::from_json(j["contribute"]);
        if (j.contains("punish")) a.plan.punish = StrategySpec::from_json(j["punish"]);
        if (!a.plan.binary.binary() || !a.plan.contribute.contributes() || !a.plan.punish.punishes()) {
          throw ConfigError("agent '" + a.id + "' has a strategy in the wrong slot");
        }
      } else if (kind == "mock") {
        a.kind = AgentKind::kMock;
      } else {
        throw ConfigError("agent '" + a.id + "' has unknown kind '" + kind + "'");
      }
      a.mock.cooperation = j.value("cooperation", 0.5);
      a.mock.garbage = j.value("garbage", false);
      a.garbage_trials = j.value("garbage_trials", std::vector<int>{});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("agent entry: ") + e.what());
    } catch (const StrategyError& e) {
      throw ConfigError(e.what());
    } catch (const llm::GatewayError& e) {
      throw ConfigError(e.what());
    }
    if (!(a.mock.cooperation >= 0.0 && a.mock.cooperation <= 1.0)) {
      throw ConfigError("agent '" + a.id + "': cooperation must be in [0, 1]");
    }
    return a;
  }
};

/// The four instruction-tuned models served through DeepInfra; in mock mode each
/// gets a different reciprocating propensity so families are distinguishable.
inline std::vector<AgentSpec> default_pool() {
  struct Row {
    const char* id;
    const char* family;
    const char* model;
    double cooperation;
  };
  const Row rows[] = {{"mixtral-8x22b", "mixtral", "mistralai/Mixtral-8x22B-Instruct-v0.1", 0.55},
                      {"qwen2.5-72b", "qwen", "Qwen/Qwen2.5-72B-Instruct", 0.65},
                      {"llama-3.3-70b", "llama", "meta-llama/Llama-3.3-70B-Instruct", 0.5},
                      {"deepseek-v3", "deepseek", "deepseek-ai/DeepSeek-V3", 0.45}};
  std::vector<AgentSpec> pool;
  for (const auto& r : rows) {
    AgentSpec a;
    a.id = r.id;
    a.family = r.family;
    a.kind = AgentKind::kLlm;
    a.endpoint = llm::ModelEndpoint::deepinfra(r.model);
    a.mock.cooperation = r.cooperation;
    pool.push_back(std::move(a));
  }
  return pool;
}

inline void validate_pool(const std::vector<AgentSpec>& pool) {
  std::set<std::string> ids;
  for (const auto& a : pool) {
    if (a.id.empty()) throw ConfigError("agent with empty id");
    if (!ids.insert(a.id).second) throw ConfigError("duplicate agent id '" + a.id + "'");
  }
}

struct AgentBuildContext {
  RunMode mode = RunMode::kMock;
  int trial_index = 0;
  std::uint64_t trial_seed = 0;
  llm::ChatClient::Options client_options;  // live transport, env lookup, sleeper
};

inline std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const AgentBuildContext& ctx) {
  const std::uint64_t seed = derive_seed(ctx.trial_seed, "agent:" + spec.id, 0);
  if (spec.kind == AgentKind::kScripted) {
    return std::make_unique<ScriptedAgent>(spec.id, spec.family, spec.plan, seed);
  }
  if (spec.kind == AgentKind::kLlm && ctx.mode == RunMode::kLive) {
    return std::make_unique<ModelAgent>(spec.id, spec.family, *spec.endpoint, ctx.client_options);
  }
  auto mock = std::make_shared<MockContext>(MockContext{spec.mock, Rng(seed), nullptr});
  const bool garbage_here = std::find(spec.garbage_trials.begin(), spec.garbage_trials.end(), ctx.trial_index) !=
                            spec.garbage_trials.end();
  if (garbage_here) mock->policy.garbage = true;
  return std::make_unique<ModelAgent>(spec.id, spec.family, mock_endpoint(spec.id, mock), llm::ChatClient::Options{},
                                      mock);
}

}  // namespace dilemma::orchestrator
