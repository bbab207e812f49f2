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

#include <algorithm>
#include <numeric>

#include "dilemma/game/payoffs.hpp"
#include "dilemma/game/state.hpp"
#include "dilemma/util/rng.hpp"
#include "fixtures/payoff_tables.hpp"

namespace dilemma {
namespace {

PayoffVector whole(std::initializer_list<int> xs) {
  PayoffVector out;
  for (int x : xs) out.push_back(Tokens::whole(x));
  return out;
}

template <std::size_t N>
PayoffVector whole(const std::array<int, N>& xs) {
  PayoffVector out;
  for (int x : xs) out.push_back(Tokens::whole(x));
  return out;
}

TEST(StagHunt, PaperExamples) {
  using fixtures::H;
  using fixtures::S;
  EXPECT_EQ(resolve_stag_hunt(std::vector{S, S, S, S}), whole({10, 10, 10, 10}));
  EXPECT_EQ(resolve_stag_hunt(std::vector{S, S, S, H}), whole({0, 0, 0, 3}));
  EXPECT_EQ(resolve_stag_hunt(std::vector{H, H, H, H}), whole({3, 3, 3, 3}));
}

TEST(StagHunt, ExhaustiveTable) {
  for (const auto& row : fixtures::kStagHuntTable) {
    EXPECT_EQ(resolve_stag_hunt(row.choices), whole(row.payoffs));
  }
}

TEST(StagHunt, WrongArityAndDomain) {
  using fixtures::S;
  try {
    resolve_stag_hunt(std::vector{S, S, S});
    FAIL();
  } catch (const GameError& e) {
    EXPECT_EQ(e.code(), GameErrc::kArity);
  }
  try {
    resolve_stag_hunt(std::vector{S, S, S, Choice::kCooperate});
    FAIL();
  } catch (const GameError& e) {
    EXPECT_EQ(e.code(), GameErrc::kDomain);
  }
}

TEST(StagHunt, PermutationSymmetry) {
  for (const auto& row : fixtures::kStagHuntTable) {
    std::array<int, 4> perm{0, 1, 2, 3};
    const PayoffVector base = resolve_stag_hunt(row.choices);
    do {
      std::array<Choice, 4> permuted{};
      for (std::size_t i = 0; i < 4; ++i) permuted[i] = row.choices[perm[i]];
      const PayoffVector out = resolve_stag_hunt(permuted);
      for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(out[i], base[perm[i]]);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST(Ipd2, ExhaustiveTable) {
  for (const auto& row : fixtures::kIpd2Table) {
    auto [a, b] = resolve_ipd2(row.choices[0], row.choices[1]);
    EXPECT_EQ(a, Tokens::whole(row.payoffs[0]));
    EXPECT_EQ(b, Tokens::whole(row.payoffs[1]));
  }
  EXPECT_THROW(resolve_ipd2(Choice::kHuntStag, Choice::kDefect), GameError);
}

TEST(Nipd, ExhaustiveTablesBothRules) {
  for (const auto& row : fixtures::kNipdPairwiseTable) {
    EXPECT_EQ(resolve_nipd(row.choices, NpdPayoffRule::kPairwiseSum), whole(row.payoffs));
  }
  for (const auto& row : fixtures::kNipdBasePlusOneTable) {
    EXPECT_EQ(resolve_nipd(row.choices, NpdPayoffRule::kBasePlusOne), whole(row.payoffs));
  }
}

TEST(Nipd, SpecExamples) {
  using fixtures::C;
  using fixtures::D;
  EXPECT_EQ(resolve_nipd(std::vector{C, C, C, C}, NpdPayoffRule::kPairwiseSum), whole({9, 9, 9, 9}));
  EXPECT_EQ(resolve_nipd(std::vector{D, D, D, D}, NpdPayoffRule::kPairwiseSum), whole({3, 3, 3, 3}));
  EXPECT_EQ(resolve_nipd(std::vector{D, D, D, D}, NpdPayoffRule::kBasePlusOne), whole({1, 1, 1, 1}));
  EXPECT_EQ(resolve_nipd(std::vector{D, C, C, C}, NpdPayoffRule::kPairwiseSum), whole({15, 6, 6, 6}));
}

// With the others' choices fixed, switching C -> D strictly raises own payoff.
TEST(Nipd, DefectionDominatesUnderBothRules) {
  for (auto rule : {NpdPayoffRule::kPairwiseSum, NpdPayoffRule::kBasePlusOne}) {
    for (int mask = 0; mask < 16; ++mask) {
      std::vector<Choice> profile(4);
      for (int i = 0; i < 4; ++i) profile[i] = (mask >> i) & 1 ? Choice::kCooperate : Choice::kDefect;
      for (std::size_t i = 0; i < 4; ++i) {
        auto coop = profile;
        auto def = profile;
        coop[i] = Choice::kCooperate;
        def[i] = Choice::kDefect;
        EXPECT_GT(resolve_nipd(def, rule)[i], resolve_nipd(coop, rule)[i]);
      }
    }
  }
  for (Choice other : {Choice::kCooperate, Choice::kDefect}) {
    EXPECT_GT(resolve_ipd2(Choice::kDefect, other).first, resolve_ipd2(Choice::kCooperate, other).first);
  }
}

TEST(Pgg, Examples) {
  EXPECT_EQ(resolve_pgg(std::vector{0, 0, 0, 0}, 20, 16), whole({20, 20, 20, 20}));
  EXPECT_EQ(resolve_pgg(std::vector{20, 20, 20, 20}, 20, 16), whole({32, 32, 32, 32}));
  EXPECT_EQ(resolve_pgg(std::vector{0, 20, 20, 20}, 20, 16), whole({44, 24, 24, 24}));
  // (20-1) + 0.4 * 3 = 20.2
  EXPECT_EQ(resolve_pgg(std::vector{1, 1, 1, 0}, 20, 16)[0], Tokens::from_tenths(202));
}

TEST(Pgg, OutOfRangeContribution) {
  EXPECT_THROW(resolve_pgg(std::vector{21, 0, 0, 0}, 20, 16), GameError);
  EXPECT_THROW(resolve_pgg(std::vector{-1, 0, 0, 0}, 20, 16), GameError);
}

TEST(Pgg, MarginalReturnIsMinusSixTenths) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> c(4);
    for (int& x : c) x = rng.between(0, 20);
    const std::size_t i = rng.below(4);
    if (c[i] == 20) continue;
    auto raised = c;
    ++raised[i];
    EXPECT_EQ((resolve_pgg(raised, 20, 16)[i] - resolve_pgg(c, 20, 16)[i]).tenths, -6);
  }
}

TEST(Punishment, Examples) {
  const PayoffVector stage = whole({20, 20, 20, 20});
  std::vector<PunishmentAllocation> none(4);
  EXPECT_EQ(apply_punishments(stage, none, 3), stage);

  std::vector<PunishmentAllocation> one(4);
  one[0].spends[2] = 2;
  EXPECT_EQ(apply_punishments(stage, one, 3), whole({18, 20, 14, 20}));

  std::vector<PunishmentAllocation> two(4);
  two[0].spends[3] = 1;
  two[1].spends[3] = 1;
  EXPECT_EQ(apply_punishments(stage, two, 3), whole({19, 19, 20, 14}));
}

TEST(Punishment, RejectsSelfTargetAndNegativeSpend) {
  const PayoffVector stage = whole({20, 20, 20, 20});
  std::vector<PunishmentAllocation> self(4);
  self[1].spends[1] = 1;
  EXPECT_THROW(apply_punishments(stage, self, 3), GameError);
  std::vector<PunishmentAllocation> neg(4);
  neg[1].spends[0] = -1;
  EXPECT_THROW(apply_punishments(stage, neg, 3), GameError);
  std::vector<PunishmentAllocation> outside(4);
  outside[1].spends[7] = 1;
  EXPECT_THROW(apply_punishments(stage, outside, 3), GameError);
}

TEST(Punishment, OrderIndependentAndNegativeAllowed) {
  const PayoffVector stage = whole({2, 20, 20, 20});
  std::vector<PunishmentAllocation> alloc(4);
  alloc[1].spends[0] = 5;
  alloc[2].spends[0] = 5;
  auto reversed = alloc;
  std::reverse(reversed.begin(), reversed.end());
  const PayoffVector out = apply_punishments(stage, alloc, 3);
  EXPECT_EQ(out[0], Tokens::whole(2 - 30));
  // Reversing seat order and mapping back gives the same result.
  std::vector<PunishmentAllocation> remapped(4);
  for (std::size_t s = 0; s < 4; ++s) {
    for (auto [t, v] : alloc[s].spends) remapped[3 - s].spends[3 - t] = v;
  }
  PayoffVector rev_stage(stage.rbegin(), stage.rend());
  PayoffVector rev_out = apply_punishments(rev_stage, remapped, 3);
  std::reverse(rev_out.begin(), rev_out.end());
  EXPECT_EQ(rev_out, out);
}

TEST(Punishment, BudgetClamp) {
  const PayoffVector stage = {Tokens::from_tenths(125), Tokens::whole(20), Tokens::whole(20),
                              Tokens::whole(20)};
  std::vector<PunishmentAllocation> alloc(4);
  alloc[0].spends = {{1, 10}, {2, 5}};
  const ClampResult r = clamp_punishment_budget(stage, alloc);
  EXPECT_EQ(r.allocations[0].spends, (std::map<int, int>{{1, 10}, {2, 2}}));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("clamped to 12"), std::string::npos);
}

TEST(GameSpecValidation, Invariants) {
  EXPECT_NO_THROW(GameSpec::make(GameKind::kIPD2, 3).validate());
  GameSpec bad = GameSpec::make(GameKind::kIPD2, 3);
  bad.n_players = 4;
  EXPECT_THROW(bad.validate(), GameError);
  GameSpec zero = GameSpec::make(GameKind::kPGG, 0);
  EXPECT_THROW(zero.validate(), GameError);
  GameSpec rich = GameSpec::make(GameKind::kPGG, 3);
  rich.multiplier_tenths = 40;  // 4.0 / 4 is not a dilemma
  EXPECT_THROW(rich.validate(), GameError);
  GameSpec no_endowment = GameSpec::make(GameKind::kPGG, 3);
  no_endowment.endowment = 0;
  EXPECT_THROW(no_endowment.validate(), GameError);
}

std::vector<ActionRecord> contributions(std::initializer_list<int> xs) {
  std::vector<ActionRecord> out;
  for (int x : xs) out.push_back(Contribution{x});
  return out;
}

TEST(Step, PunishRoundProducesOneRecordWithBothPhases) {
  GameState s(GameSpec::make(GameKind::kIPGGPunish, 10));
  EXPECT_EQ(s.current_phase(), Phase::kContribute);
  auto first = step(s, Phase::kContribute, contributions({10, 10, 10, 0}));
  EXPECT_FALSE(first.completed.has_value());
  EXPECT_EQ(first.state.current_phase(), Phase::kPunish);
  ASSERT_TRUE(first.state.pending().has_value());

  std::vector<ActionRecord> punish(4, PunishmentAllocation{});
  std::get<PunishmentAllocation>(punish[0]).spends[3] = 2;
  auto second = step(first.state, Phase::kPunish, punish);
  ASSERT_TRUE(second.completed.has_value());
  const RoundRecord& r = *second.completed;
  ASSERT_EQ(r.phases.size(), 2u);
  EXPECT_EQ(r.phases[0].phase, Phase::kContribute);
  EXPECT_EQ(r.phases[1].phase, Phase::kPunish);
  // Stage: pot 30 -> share 12; P1..P3 = 22, P4 = 32.
  EXPECT_EQ(r.stage_payoffs, whole({22, 22, 22, 32}));
  EXPECT_EQ(r.payoffs, whole({20, 22, 22, 26}));
  EXPECT_EQ(second.state.log().totals, r.payoffs);
  EXPECT_EQ(second.state.current_round(), 2);
}

TEST(Step, CommunicationThenAction) {
  GameState s(GameSpec::make(GameKind::kStagHuntComm, 3));
  std::vector<ActionRecord> words{Word{"stag"}, Word{"stag"}, Word{"go"}, Word{"hare"}};
  auto a = step(s, Phase::kCommunicate, words);
  EXPECT_EQ(a.state.pending()->broadcast_words,
            (std::vector<std::string>{"stag", "stag", "go", "hare"}));
  std::vector<ActionRecord> acts(4, Choice::kHuntStag);
  auto b = step(a.state, Phase::kAct, acts);
  ASSERT_TRUE(b.completed);
  EXPECT_EQ(b.completed->broadcast_words.size(), 4u);
  EXPECT_EQ(b.completed->payoffs, whole({10, 10, 10, 10}));
}

TEST(Step, ErrorsLeaveStateUntouched) {
  GameState s(GameSpec::make(GameKind::kPGG, 1));
  EXPECT_THROW(step(s, Phase::kAct, std::vector<ActionRecord>(4, Choice::kCooperate)), GameError);
  EXPECT_THROW(step(s, Phase::kContribute, std::vector<ActionRecord>(4, Choice::kCooperate)), GameError);
  EXPECT_THROW(step(s, Phase::kContribute, contributions({1, 2, 3})), GameError);
  EXPECT_FALSE(s.pending().has_value());

  auto done = step(s, Phase::kContribute, contributions({1, 2, 3, 4}));
  EXPECT_TRUE(is_terminal(done.state));
  try {
    step(done.state, Phase::kContribute, contributions({1, 2, 3, 4}));
    FAIL();
  } catch (const GameError& e) {
    EXPECT_EQ(e.code(), GameErrc::kTerminal);
  }
}

TEST(Terminal, FreshCompletedAborted) {
  GameState s(GameSpec::make(GameKind::kIPD2, 10));
  EXPECT_FALSE(is_terminal(s));
  for (int r = 0; r < 10; ++r) {
    s = step(s, Phase::kAct, {Choice::kCooperate, Choice::kDefect}).state;
  }
  EXPECT_TRUE(is_terminal(s));
  EXPECT_TRUE(s.log().complete());
  EXPECT_EQ(s.log().totals, whole({0, 50}));

  GameState fresh(GameSpec::make(GameKind::kIPD2, 10));
  GameState aborted = fresh.aborted(AbortInfo{"agent", 1, Phase::kAct, "garbage"});
  EXPECT_TRUE(is_terminal(aborted));
  EXPECT_TRUE(aborted.log().aborted());
  EXPECT_EQ(aborted.log().abort->cause, "garbage");
}

TEST(Determinism, IdenticalActionsGiveIdenticalLogs) {
  auto play = [] {
    Rng rng(5);
    GameState s(GameSpec::make(GameKind::kIPGGPunish, 10));
    while (!is_terminal(s)) {
      std::vector<ActionRecord> acts;
      if (s.current_phase() == Phase::kContribute) {
        for (int i = 0; i < 4; ++i) acts.push_back(Contribution{rng.between(0, 20)});
      } else {
        for (int i = 0; i < 4; ++i) {
          PunishmentAllocation p;
          const int t = static_cast<int>(rng.below(4));
          if (t != i) p.spends[t] = rng.between(0, 3);
          acts.push_back(p);
        }
      }
      s = step(s, s.current_phase(), acts).state;
    }
    return s.log();
  };
  EXPECT_EQ(play(), play());
}

TEST(Totals, EqualSumOfRoundPayoffs) {
  Rng rng(99);
  GameState s(GameSpec::make(GameKind::kNIPD, 7));
  while (!is_terminal(s)) {
    std::vector<ActionRecord> acts;
    for (int i = 0; i < 4; ++i) acts.push_back(rng.bernoulli(0.5) ? Choice::kCooperate : Choice::kDefect);
    s = step(s, Phase::kAct, acts).state;
  }
  PayoffVector sum(4);
  for (const auto& r : s.log().rounds) {
    for (std::size_t i = 0; i < 4; ++i) sum[i] += r.payoffs[i];
  }
  EXPECT_EQ(sum, s.log().totals);
}

}  // namespace
}  // namespace dilemma
