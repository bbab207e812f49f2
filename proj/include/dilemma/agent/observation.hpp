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

#include <optional>
#include <string>
#include <vector>

#include "dilemma/game/state.hpp"

namespace dilemma {

inline constexpr std::string_view kNoHistorySentinel = "No previous rounds have been played yet.";

namespace detail {

inline std::string player_list(std::size_t n, const auto& value_of) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != 0) out += ", ";
    out += "P" + std::to_string(i + 1) + "=" + value_of(i);
  }
  return out;
}

inline std::string payoff_list(const PayoffVector& p) {
  return player_list(p.size(), [&](std::size_t i) { return p[i].str(); });
}

inline std::string punishment_list(const PhaseActions& pa) {
  std::vector<std::string> parts;
  for (std::size_t s = 0; s < pa.actions.size(); ++s) {
    const auto* alloc = std::get_if<PunishmentAllocation>(&pa.actions[s]);
    if (alloc == nullptr) continue;
    for (const auto& [target, spend] : alloc->spends) {
      if (spend == 0) continue;
      parts.push_back("P" + std::to_string(s + 1) + "->P" + std::to_string(target + 1) + "=" +
                      std::to_string(spend));
    }
  }
  return parts.empty() ? "none" : text::join(parts, ", ");
}

// One line per phase, in phase order.
inline void render_round(const GameSpec& spec, const RoundRecord& r, std::vector<std::string>& lines) {
  const std::string prefix = "Round " + std::to_string(r.round_index) + " ";
  const bool finished = !r.payoffs.empty() && r.phases.size() == phases_of(spec.kind).size();
  for (const auto& pa : r.phases) {
    const auto actions = [&](std::size_t i) { return describe(pa.actions[i]); };
    switch (pa.phase) {
      case Phase::kCommunicate:
        lines.push_back(prefix + "words: " + player_list(pa.actions.size(), actions));
        break;
      case Phase::kAct:
        lines.push_back(prefix + "actions: " + player_list(pa.actions.size(), actions) +
                        " | payoffs: " + payoff_list(r.payoffs));
        break;
      case Phase::kContribute: {
        std::string line = prefix + "contributions: " + player_list(pa.actions.size(), actions);
        if (spec.kind == GameKind::kPGG) {
          line += " | payoffs: " + payoff_list(r.payoffs);
        } else {
          line += " | contribution-stage payoffs: " + payoff_list(r.stage_payoffs);
        }
        lines.push_back(std::move(line));
        break;
      }
      case Phase::kPunish:
        lines.push_back(prefix + "punishments: " + punishment_list(pa) +
                        (finished ? " | final payoffs: " + payoff_list(r.payoffs) : ""));
        break;
    }
  }
}

}  // namespace detail

/// Deterministic text for `${game_history_string}`: one line per round per
/// phase. A contribution phase of the open round is included (contributions
/// are revealed before punishment); broadcast words of the open round are not.
inline std::string render_history(const GameSpec& spec, const std::vector<RoundRecord>& rounds,
                                  const std::optional<RoundRecord>& open_round = std::nullopt) {
  std::vector<std::string> lines;
  for (const auto& r : rounds) detail::render_round(spec, r, lines);
  if (open_round && spec.kind == GameKind::kIPGGPunish) {
    RoundRecord visible = *open_round;
    std::erase_if(visible.phases, [](const PhaseActions& pa) { return pa.phase != Phase::kContribute; });
    detail::render_round(spec, visible, lines);
  }
  if (lines.empty()) return std::string(kNoHistorySentinel);
  return text::join(lines, "\n");
}

struct Observation {
  int player = 0;  // 0-based seat
  GameSpec spec;
  int round_index = 1;
  Phase phase = Phase::kAct;
  std::vector<RoundRecord> history;    // completed rounds only
  std::optional<RoundRecord> current;  // the open round, if a phase already ran
  std::string history_text;
  std::vector<std::string> broadcast_words;  // action phase of StagHuntComm
  std::vector<std::string> lessons;          // curriculum order
};

inline Observation make_observation(const GameState& state, int seat,
                                    const std::vector<std::string>& lessons) {
  Observation obs;
  obs.player = seat;
  obs.spec = state.spec();
  obs.round_index = state.current_round();
  obs.phase = state.current_phase();
  obs.history = state.log().rounds;
  obs.current = state.pending();
  obs.history_text = render_history(obs.spec, obs.history, obs.current);
  if (obs.phase == Phase::kAct && obs.current) obs.broadcast_words = obs.current->broadcast_words;
  obs.lessons = lessons;
  return obs;
}

}  // namespace dilemma
