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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dilemma/agent/action_parser.hpp"
#include "dilemma/game/state.hpp"

namespace dilemma::orchestrator {

using Event = nlohmann::ordered_json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void emit(const Event& e) = 0;
};

class NullSink final : public EventSink {
 public:
  void emit(const Event&) override {}
};

class VectorSink final : public EventSink {
 public:
  void emit(const Event& e) override {
    std::lock_guard lock(mu_);
    events.push_back(e);
  }
  std::vector<Event> events;

 private:
  std::mutex mu_;
};

// One JSON object per line, flushed per event so aborted runs keep their prefix.
class JsonlFileSink final : public EventSink {
 public:
  explicit JsonlFileSink(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }
  void emit(const Event& e) override {
    out_ << e.dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed on " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// ------------------------------------------------------------- value encoding

inline nlohmann::ordered_json tokens_json(const PayoffVector& p) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& t : p) a.push_back(t.value());
  return a;
}

inline Tokens tokens_from_json(const nlohmann::json& v) {
  if (!v.is_number()) throw std::invalid_argument("payoff is not a number");
  return Tokens::from_tenths(std::llround(v.get<double>() * 10.0));
}

inline PayoffVector payoffs_from_json(const nlohmann::json& a) {
  if (!a.is_array()) throw std::invalid_argument("payoff list is not an array");
  PayoffVector out;
  for (const auto& v : a) out.push_back(tokens_from_json(v));
  return out;
}

inline nlohmann::ordered_json spec_json(const GameSpec& s) {
  return {{"game", std::string(game_name(s.kind))},
          {"n_players", s.n_players},
          {"rounds", s.rounds},
          {"endowment", s.endowment},
          {"multiplier", s.multiplier()},
          {"punish_ratio", s.punish_ratio},
          {"npd_rule", std::string(to_string(s.npd_rule))}};
}

inline GameSpec spec_from_json(const nlohmann::json& j) {
  GameSpec s;
  s.kind = game_kind_from_name(j.at("game").get<std::string>());
  s.n_players = j.at("n_players").get<int>();
  s.rounds = j.at("rounds").get<int>();
  s.endowment = j.at("endowment").get<int>();
  s.multiplier_tenths = static_cast<int>(std::lround(j.at("multiplier").get<double>() * 10.0));
  s.punish_ratio = j.at("punish_ratio").get<int>();
  s.npd_rule = npd_rule_from_name(j.at("npd_rule").get<std::string>());
  s.validate();
  return s;
}

inline nlohmann::ordered_json round_json(const RoundRecord& r) {
  nlohmann::ordered_json phases = nlohmann::ordered_json::array();
  for (const auto& pa : r.phases) {
    auto actions = nlohmann::ordered_json::array();
    for (const auto& a : pa.actions) actions.push_back(action_to_json(a));
    phases.push_back({{"phase", std::string(to_string(pa.phase))}, {"actions", actions}});
  }
  return {{"round", r.round_index},
          {"phases", phases},
          {"broadcast_words", r.broadcast_words},
          {"stage_payoffs", tokens_json(r.stage_payoffs)},
          {"payoffs", tokens_json(r.payoffs)},
          {"warnings", r.warnings}};
}

/// Decodes a round object; actions are re-parsed with the same schema rules agents face.
inline RoundRecord round_from_json(const nlohmann::json& j, const GameSpec& spec) {
  RoundRecord r;
  r.round_index = j.at("round").get<int>();
  for (const auto& p : j.at("phases")) {
    PhaseActions pa;
    pa.phase = phase_from_name(p.at("phase").get<std::string>());
    for (const auto& a : p.at("actions")) {
      pa.actions.push_back(parse_action_object(nlohmann::json{{"action", a}}, pa.phase, spec));
    }
    r.phases.push_back(std::move(pa));
  }
  r.broadcast_words = j.at("broadcast_words").get<std::vector<std::string>>();
  r.stage_payoffs = payoffs_from_json(j.at("stage_payoffs"));
  r.payoffs = payoffs_from_json(j.at("payoffs"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

inline nlohmann::ordered_json abort_json(const AbortInfo& a, int stage) {
  return {{"reason", a.cause},
          {"stage", stage},
          {"round", a.round},
          {"phase", std::string(to_string(a.phase))},
          {"agent_id", a.agent_id}};
}

// --------------------------------------------------------------- event schema

inline constexpr std::array<std::string_view, 8> kEventKinds = {
    "trial_start", "stage_start", "prompt", "exchange", "round", "lesson", "stage_end", "trial_end"};

enum class FieldType { kString, kInt, kUInt, kNumber, kBool, kArray, kObject, kObjectOrNull, kNumberOrNull };

struct FieldRule {
  std::string_view name;
  FieldType type;
};

inline bool field_matches(const nlohmann::json& v, FieldType t) {
  switch (t) {
    case FieldType::kString: return v.is_string();
    case FieldType::kInt: return v.is_number_integer();
    case FieldType::kUInt: return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    case FieldType::kNumber: return v.is_number();
    case FieldType::kBool: return v.is_boolean();
    case FieldType::kArray: return v.is_array();
    case FieldType::kObject: return v.is_object();
    case FieldType::kObjectOrNull: return v.is_object() || v.is_null();
    case FieldType::kNumberOrNull: return v.is_number() || v.is_null();
  }
  return false;
}

inline const std::vector<FieldRule>& schema_for(std::string_view kind) {
  using F = FieldType;
  static const std::map<std::string_view, std::vector<FieldRule>> schemas = {
      {"trial_start",
       {{"trial_id", F::kString}, {"condition", F::kString}, {"trial_index", F::kInt}, {"seed", F::kUInt},
        {"mode", F::kString}, {"stages", F::kArray}, {"roles", F::kArray}, {"agents", F::kArray}}},
      {"stage_start",
       {{"trial_id", F::kString}, {"stage", F::kInt}, {"spec", F::kObject}, {"seats", F::kArray},
        {"lesson_count", F::kInt}}},
      {"prompt",
       {{"trial_id", F::kString}, {"stage", F::kInt}, {"round", F::kInt}, {"phase", F::kString},
        {"player_id", F::kInt}, {"agent_id", F::kString}, {"attempt", F::kInt}, {"text", F::kString}}},
      {"exchange",
       {{"trial_id", F::kString}, {"stage", F::kInt}, {"round", F::kInt}, {"phase", F::kString},
        {"player_id", F::kInt}, {"agent_id", F::kString}, {"attempt", F::kInt}, {"response_text", F::kString},
        {"calls", F::kArray}, {"parsed", F::kBool}, {"error", F::kString}}},
      {"round",
       {{"trial_id", F::kString}, {"stage", F::kInt}, {"round", F::kInt}, {"phases", F::kArray},
        {"broadcast_words", F::kArray}, {"stage_payoffs", F::kArray}, {"payoffs", F::kArray},
        {"warnings", F::kArray}, {"totals", F::kArray}}},
      {"lesson",
       {{"trial_id", F::kString}, {"stage", F::kInt}, {"game", F::kString}, {"text", F::kString},
        {"text_hash", F::kString}, {"generator", F::kString}, {"generated_at", F::kString},
        {"prompt", F::kString}}},
      {"stage_end",
       {{"trial_id", F::kString}, {"stage", F::kInt}, {"game", F::kString}, {"status", F::kString},
        {"rounds_played", F::kInt}, {"totals", F::kArray}, {"cooperation_rate", F::kNumberOrNull},
        {"avg_payoff", F::kNumberOrNull}, {"abort", F::kObjectOrNull}}},
      {"trial_end",
       {{"trial_id", F::kString}, {"condition", F::kString}, {"status", F::kString},
        {"stages_completed", F::kInt}, {"lessons", F::kInt}, {"abort", F::kObjectOrNull},
        {"final_metrics", F::kObjectOrNull}}},
  };
  static const std::vector<FieldRule> none;
  auto it = schemas.find(kind);
  return it == schemas.end() ? none : it->second;
}

/// Empty result means the event conforms to its kind's field list.
inline std::vector<std::string> schema_violations(const nlohmann::json& e) {
  std::vector<std::string> out;
  if (!e.is_object()) return {"event is not a JSON object"};
  const auto kind = e.find("kind");
  if (kind == e.end() || !kind->is_string()) return {"missing string field 'kind'"};
  const std::string k = kind->get<std::string>();
  if (std::find(kEventKinds.begin(), kEventKinds.end(), k) == kEventKinds.end()) {
    return {"unknown event kind '" + k + "'"};
  }
  for (const auto& rule : schema_for(k)) {
    auto it = e.find(std::string(rule.name));
    if (it == e.end()) {
      out.push_back(k + ": missing field '" + std::string(rule.name) + "'");
    } else if (!field_matches(*it, rule.type)) {
      out.push_back(k + ": field '" + std::string(rule.name) + "' has the wrong type");
    }
  }
  return out;
}

}  // namespace dilemma::orchestrator
