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

// Scripted games played out by hand, round by round.

#include <array>

#include "dilemma/game/types.hpp"

namespace dilemma::fixtures {

struct Ipd2Round {
  Choice tft;
  Choice alld;
  int tft_payoff;
  int alld_payoff;
};

// TitForTat opens with C and then copies; AlwaysDefect never moves.
// R1 C/D -> 0/5, R2 D/D -> 1/1, R3 D/D -> 1/1. Totals 2 and 7.
inline constexpr std::array<Ipd2Round, 3> kTftVsAllD{{
    {Choice::kCooperate, Choice::kDefect, 0, 5},
    {Choice::kDefect, Choice::kDefect, 1, 1},
    {Choice::kDefect, Choice::kDefect, 1, 1},
}};
inline constexpr std::array<int, 2> kTftVsAllDTotals{2, 7};

// Four players contribute 10 of 20: keep 10, pot 40 * 1.6 / 4 = 16 back. 26 each.
inline constexpr int kFixedTenContribution = 10;
inline constexpr int kFixedTenPerRound = 26;
inline constexpr int kFixedTenRounds = 3;

}  // namespace dilemma::fixtures
