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

#include <vector>

#include "dilemma/game/state.hpp"

namespace dilemma::fixtures {

// Plays a game from per-round choice profiles (binary games).
inline GameLog play_choices(GameSpec spec, const std::vector<std::vector<Choice>>& rounds) {
  GameState s(spec);
  for (const auto& profile : rounds) {
    if (s.current_phase() == Phase::kCommunicate) {
      std::vector<ActionRecord> words;
      for (Choice c : profile) words.push_back(Word{is_cooperative(c) ? "stag" : "hare"});
      s = step(s, Phase::kCommunicate, words).state;
    }
    std::vector<ActionRecord> acts(profile.begin(), profile.end());
    s = step(s, Phase::kAct, acts).state;
  }
  return s.log();
}

// Plays a PGG-family game from per-round contributions; punishment rounds use
// `punish` if given, otherwise nobody punishes.
inline GameLog play_contributions(GameSpec spec, const std::vector<std::vector<int>>& rounds,
                                  const std::vector<std::vector<PunishmentAllocation>>& punish = {}) {
  GameState s(spec);
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    std::vector<ActionRecord> acts;
    for (int c : rounds[r]) acts.push_back(Contribution{c});
    s = step(s, Phase::kContribute, acts).state;
    if (spec.kind == GameKind::kIPGGPunish) {
      std::vector<ActionRecord> p(rounds[r].size(), PunishmentAllocation{});
      if (r < punish.size()) p.assign(punish[r].begin(), punish[r].end());
      s = step(s, Phase::kPunish, p).state;
    }
  }
  return s.log();
}

}  // namespace dilemma::fixtures
