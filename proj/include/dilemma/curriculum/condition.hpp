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

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dilemma/game/types.hpp"
#include "dilemma/util/rng.hpp"

namespace dilemma::curriculum {

class CurriculumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ConditionName { kFullCurriculum, kScrambled, kDirectPrecursor, kControl };

inline constexpr std::array<ConditionName, 4> kAllConditions = {
    ConditionName::kFullCurriculum, ConditionName::kScrambled, ConditionName::kDirectPrecursor,
    ConditionName::kControl};

inline std::string_view to_string(ConditionName c) {
  switch (c) {
    case ConditionName::kFullCurriculum: return "full_curriculum";
    case ConditionName::kScrambled: return "scrambled";
    case ConditionName::kDirectPrecursor: return "direct_precursor";
    case ConditionName::kControl: return "control";
  }
  return "?";
}

/// Accepts the snake_case ids and the CamelCase names ("FullCurriculum").
inline ConditionName condition_from_name(std::string_view name) {
  for (ConditionName c : kAllConditions) {
    if (name == to_string(c)) return c;
  }
  if (name == "FullCurriculum") return ConditionName::kFullCurriculum;
  if (name == "Scrambled") return ConditionName::kScrambled;
  if (name == "DirectPrecursor") return ConditionName::kDirectPrecursor;
  if (name == "Control") return ConditionName::kControl;
  throw CurriculumError("unknown condition '" + std::string(name) +
                        "' (expected full_curriculum, scrambled, direct_precursor or control)");
}

inline constexpr int kTargetRounds = 10;
inline constexpr int kPrecursorRounds = 3;

struct StageSpec {
  int stage_index = 1;  // 1-based
  GameSpec game;
};

struct CurriculumCondition {
  ConditionName name = ConditionName::kControl;
  std::vector<StageSpec> stages;
  std::optional<std::uint64_t> scramble_seed;

  const StageSpec& target() const { return stages.back(); }
  std::vector<GameKind> kinds() const {
    std::vector<GameKind> out;
    for (const auto& s : stages) out.push_back(s.game.kind);
    return out;
  }
};

struct ConditionOptions {
  int pgg_rounds = kPrecursorRounds;
  NpdPayoffRule npd_rule = NpdPayoffRule::kPairwiseSum;
};

/// Stage list for a condition. The seed is required for Scrambled and only
/// affects the order of the three precursor games.
inline CurriculumCondition build_condition(ConditionName name, std::optional<std::uint64_t> scramble_seed,
                                           const ConditionOptions& opts = {}) {
  if (name == ConditionName::kScrambled && !scramble_seed) {
    throw CurriculumError("condition 'scrambled' requires a seed (--seed)");
  }
  auto precursor = [&](GameKind k) {
    GameSpec g = GameSpec::make(k, k == GameKind::kPGG ? opts.pgg_rounds : kPrecursorRounds);
    g.npd_rule = opts.npd_rule;
    return g;
  };
  std::vector<GameSpec> games;
  switch (name) {
    case ConditionName::kFullCurriculum:
    case ConditionName::kScrambled:
      games = {precursor(GameKind::kIPD2), precursor(GameKind::kNIPD), precursor(GameKind::kPGG)};
      break;
    case ConditionName::kDirectPrecursor:
      games = {precursor(GameKind::kPGG)};
      break;
    case ConditionName::kControl:
      break;
  }
  if (name == ConditionName::kScrambled) {
    Rng rng(derive_seed(*scramble_seed, "scramble", 0));
    shuffle(std::span<GameSpec>(games), rng);
  }
  games.push_back(GameSpec::make(GameKind::kIPGGPunish, kTargetRounds));

  CurriculumCondition c;
  c.name = name;
  c.scramble_seed = name == ConditionName::kScrambled ? scramble_seed : std::nullopt;
  for (std::size_t i = 0; i < games.size(); ++i) {
    games[i].validate();
    c.stages.push_back({static_cast<int>(i) + 1, games[i]});
  }
  return c;
}

}  // namespace dilemma::curriculum
