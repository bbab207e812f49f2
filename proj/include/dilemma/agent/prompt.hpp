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

#include <map>
#include <string>

#include "dilemma/agent/observation.hpp"
#include "dilemma/agent/templates.hpp"

namespace dilemma {

inline constexpr std::string_view kLessonBlockHeader = "### LESSONS FROM PREVIOUS GAMES";
inline constexpr std::string_view kLessonBlockRule =
    "--------------------------------------------------------------------------------";

/// Labeled lesson block placed above the game rules; empty when there are no lessons.
inline std::string render_lesson_block(const std::vector<std::string>& lessons) {
  if (lessons.empty()) return {};
  std::string out(kLessonBlockHeader);
  out += "\n";
  for (std::size_t i = 0; i < lessons.size(); ++i) {
    out += "Lesson " + std::to_string(i + 1) + ": " + lessons[i] + "\n";
  }
  out += kLessonBlockRule;
  out += "\n\n";
  return out;
}

inline std::string render_broadcast_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i != 0) out += "\n";
    out += "Player " + std::to_string(i + 1) + ": " + words[i];
  }
  return out;
}

/// Placeholder values derivable from an observation. Keys a template does not
/// use are ignored; keys it needs but the observation cannot supply are absent.
inline std::map<std::string, std::string> placeholder_values(const Observation& obs) {
  std::map<std::string, std::string> v;
  v["player_id"] = std::to_string(obs.player + 1);
  v["round_number"] = std::to_string(obs.round_index);
  v["round_num"] = std::to_string(obs.round_index);
  v["rounds"] = std::to_string(obs.spec.rounds);
  v["rounds - round_num"] = std::to_string(obs.spec.rounds - obs.round_index);
  v["n_players"] = std::to_string(obs.spec.n_players);
  v["game_history_string"] = obs.history_text;
  if (obs.spec.n_players == 2) {
    v["opponent_name"] = "Player " + std::to_string(2 - obs.player);
  }
  if (!obs.broadcast_words.empty()) {
    v["communication_results_string"] = render_broadcast_words(obs.broadcast_words);
  }
  if (obs.phase == Phase::kContribute) v["stage_name"] = "Contribution";
  if (obs.phase == Phase::kPunish) v["stage_name"] = "Punishment";
  return v;
}

inline std::string render_prompt(const PromptTemplate& tpl, const Observation& obs) {
  return render_lesson_block(obs.lessons) + tpl.fill(placeholder_values(obs));
}

inline std::string render_prompt(const Observation& obs) {
  return render_prompt(template_for(obs.spec.kind, obs.phase), obs);
}

}  // namespace dilemma
