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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dilemma/game/types.hpp"
#include "dilemma/util/text.hpp"

namespace dilemma {

enum class ParseErrc {
  kNoJsonFound,
  kInvalidJson,
  kSchemaMismatch,
  kOutOfRange,
  kUnknownPlayer,
  kSelfTarget,
};

inline std::string_view to_string(ParseErrc e) {
  switch (e) {
    case ParseErrc::kNoJsonFound: return "no_json_found";
    case ParseErrc::kInvalidJson: return "invalid_json";
    case ParseErrc::kSchemaMismatch: return "schema_mismatch";
    case ParseErrc::kOutOfRange: return "out_of_range";
    case ParseErrc::kUnknownPlayer: return "unknown_player";
    case ParseErrc::kSelfTarget: return "self_target";
  }
  return "unknown";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ParseErrc code() const noexcept { return code_; }

 private:
  ParseErrc code_;
};

namespace detail {

// Index one past the '}' closing the object that opens at `open`, or npos.
inline std::size_t match_object(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

// Drops ",}" and ",]" outside strings; a common model slip.
inline std::string strip_trailing_commas(std::string_view s) {
  std::string out;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out.push_back(c);
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && text::is_space(s[j])) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

inline std::optional<nlohmann::json> parse_object(std::string_view candidate) {
  auto j = nlohmann::json::parse(candidate, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) j = nlohmann::json::parse(strip_trailing_commas(candidate), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

inline std::string strip_code_fences(std::string_view raw) {
  std::string out;
  for (const auto& line : text::split(raw, '\n')) {
    if (text::starts_with(text::trim(line), "```")) {
      out += "\n";
      continue;
    }
    out += line;
    out += "\n";
  }
  return out;
}

}  // namespace detail

/// First balanced top-level JSON object in `raw` that carries an "action" key.
/// Code fences and surrounding prose are ignored.
inline std::string extract_json(std::string_view raw) {
  const std::string body = detail::strip_code_fences(raw);
  std::size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string::npos) {
    const std::size_t end = detail::match_object(body, pos);
    if (end == std::string::npos) break;
    const std::string_view candidate(body.data() + pos, end - pos);
    if (auto obj = detail::parse_object(candidate); obj && obj->contains("action")) {
      return std::string(candidate);
    }
    ++pos;
  }
  throw ParseError(ParseErrc::kNoJsonFound, "no JSON object with an \"action\" key");
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(ParseErrc::kSchemaMismatch, std::string("missing \"") + key + "\"");
  }
  return obj.at(key);
}

inline long long require_integer(const nlohmann::json& v, const char* key) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 1e15) {
      return static_cast<long long>(d);
    }
  }
  throw ParseError(ParseErrc::kSchemaMismatch, std::string("\"") + key + "\" must be an integer");
}

inline void require_type(const nlohmann::json& action, std::string_view expected) {
  const auto& type = require_field(action, "type");
  if (!type.is_string() || text::normalize(type.get<std::string>()) != expected) {
    throw ParseError(ParseErrc::kSchemaMismatch,
                     "\"type\" must be \"" + std::string(expected) + "\"");
  }
}

inline std::string unquote(std::string_view s) {
  s = text::trim(s);
  while (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    s = text::trim(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

inline Choice parse_choice(const nlohmann::json& action, GameKind kind) {
  const auto& choice = require_field(action, "choice");
  if (!choice.is_string()) throw ParseError(ParseErrc::kSchemaMismatch, "\"choice\" must be a string");
  const std::string c = text::normalize(unquote(choice.get<std::string>()));
  if (is_stag_family(kind)) {
    if (c == "hunt stag") return Choice::kHuntStag;
    if (c == "hunt hare") return Choice::kHuntHare;
    throw ParseError(ParseErrc::kOutOfRange, "choice must be 'Hunt Stag' or 'Hunt Hare'");
  }
  if (c == "cooperate") return Choice::kCooperate;
  if (c == "defect") return Choice::kDefect;
  throw ParseError(ParseErrc::kOutOfRange, "choice must be 'Cooperate' or 'Defect'");
}

}  // namespace detail

/// Validates the "action" object of a reply against the schema of `phase`.
/// `self` (0-based seat) enables the self-punishment check.
inline ActionRecord parse_action_object(const nlohmann::json& reply, Phase phase,
                                        const GameSpec& spec,
                                        std::optional<int> self = std::nullopt) {
  const auto& action = detail::require_field(reply, "action");
  if (!action.is_object()) throw ParseError(ParseErrc::kSchemaMismatch, "\"action\" must be an object");

  const auto phase_valid = [&] {
    switch (phase) {
      case Phase::kAct: return !is_pgg_family(spec.kind);
      case Phase::kCommunicate: return spec.kind == GameKind::kStagHuntComm;
      case Phase::kContribute: return is_pgg_family(spec.kind);
      case Phase::kPunish: return spec.kind == GameKind::kIPGGPunish;
    }
    return false;
  }();
  if (!phase_valid) {
    throw ParseError(ParseErrc::kSchemaMismatch, std::string(to_string(phase)) +
                                                     " phase does not exist in " +
                                                     std::string(game_name(spec.kind)));
  }

  switch (phase) {
    case Phase::kAct:
      return detail::parse_choice(action, spec.kind);

    case Phase::kContribute: {
      detail::require_type(action, "contribute");
      const long long amount = detail::require_integer(detail::require_field(action, "amount"), "amount");
      if (amount < 0 || amount > spec.endowment) {
        throw ParseError(ParseErrc::kOutOfRange, "amount " + std::to_string(amount) +
                                                     " outside [0, " + std::to_string(spec.endowment) + "]");
      }
      return Contribution{static_cast<int>(amount)};
    }

    case Phase::kPunish: {
      detail::require_type(action, "punish");
      const auto& targets = detail::require_field(action, "targets");
      if (!targets.is_array()) throw ParseError(ParseErrc::kSchemaMismatch, "\"targets\" must be a list");
      PunishmentAllocation alloc;
      for (const auto& t : targets) {
        const long long id = detail::require_integer(detail::require_field(t, "player_id"), "player_id");
        const long long spend =
            detail::require_integer(detail::require_field(t, "spend_amount"), "spend_amount");
        if (id < 1 || id > spec.n_players) {
          throw ParseError(ParseErrc::kUnknownPlayer, "no player " + std::to_string(id));
        }
        if (self && id - 1 == *self) throw ParseError(ParseErrc::kSelfTarget, "cannot punish yourself");
        if (spend < 0) throw ParseError(ParseErrc::kOutOfRange, "spend_amount must be >= 0");
        if (spend > 1'000'000) throw ParseError(ParseErrc::kOutOfRange, "spend_amount too large");
        alloc.spends[static_cast<int>(id - 1)] += static_cast<int>(spend);
      }
      return alloc;
    }

    case Phase::kCommunicate: {
      detail::require_type(action, "communicate");
      const auto& word = detail::require_field(action, "word");
      if (!word.is_string()) throw ParseError(ParseErrc::kSchemaMismatch, "\"word\" must be a string");
      const std::string_view w = text::trim(word.get_ref<const std::string&>());
      std::size_t end = 0;
      while (end < w.size() && !text::is_space(w[end])) ++end;
      if (end == 0) throw ParseError(ParseErrc::kOutOfRange, "broadcast word is empty");
      return Word{std::string(w.substr(0, end))};
    }
  }
  throw ParseError(ParseErrc::kSchemaMismatch, "unknown phase");
}

inline ActionRecord parse_action(std::string_view json_text, Phase phase, const GameSpec& spec,
                                 std::optional<int> self = std::nullopt) {
  auto reply = detail::parse_object(json_text);
  if (!reply) throw ParseError(ParseErrc::kInvalidJson, "reply is not a JSON object");
  return parse_action_object(*reply, phase, spec, self);
}

struct AgentResponse {
  std::string raw_text;
  std::string reasoning;
  ActionRecord action;
};

/// extract_json + parse_action over a free-form model reply.
inline AgentResponse parse_response(std::string raw, Phase phase, const GameSpec& spec,
                                    std::optional<int> self = std::nullopt) {
  const std::string json_text = extract_json(raw);
  const auto reply = detail::parse_object(json_text);
  AgentResponse r{std::move(raw), {}, parse_action_object(*reply, phase, spec, self)};
  if (auto it = reply->find("reasoning"); it != reply->end() && it->is_string()) {
    r.reasoning = it->get<std::string>();
  }
  return r;
}

/// The reply JSON in the shape the prompt templates ask for.
inline nlohmann::ordered_json action_to_json(const ActionRecord& action) {
  struct Visitor {
    nlohmann::ordered_json operator()(Choice c) const { return {{"choice", std::string(to_string(c))}}; }
    nlohmann::ordered_json operator()(const Contribution& c) const {
      return {{"type", "contribute"}, {"amount", c.amount}};
    }
    nlohmann::ordered_json operator()(const PunishmentAllocation& p) const {
      nlohmann::ordered_json targets = nlohmann::ordered_json::array();
      for (const auto& [t, s] : p.spends) targets.push_back({{"player_id", t + 1}, {"spend_amount", s}});
      return {{"type", "punish"}, {"targets", targets}};
    }
    nlohmann::ordered_json operator()(const Word& w) const { return {{"type", "communicate"}, {"word", w.text}}; }
  };
  return std::visit(Visitor{}, action);
}

inline std::string serialize_action(const ActionRecord& action, std::string_view reasoning = "") {
  nlohmann::ordered_json out;
  out["reasoning"] = std::string(reasoning);
  out["action"] = action_to_json(action);
  return out.dump(2);
}

}  // namespace dilemma
