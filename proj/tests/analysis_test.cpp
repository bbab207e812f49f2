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

#include <cmath>

#include "dilemma/analysis/export.hpp"
#include "fixtures/logs.hpp"
#include "fixtures/t_oracle.hpp"

namespace dilemma::analysis {
namespace {

using fixtures::play_choices;
using fixtures::play_contributions;
using fixtures::t_quantile_975_oracle;
constexpr Choice S = Choice::kHuntStag;
constexpr Choice H = Choice::kHuntHare;
constexpr Choice C = Choice::kCooperate;
constexpr Choice D = Choice::kDefect;

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

TEST(CooperationRate, SaturationZeroAndHalf) {
  auto spec = GameSpec::make(GameKind::kStagHunt, 3);
  EXPECT_EQ(cooperation_rate(play_choices(spec, {{S, S, S, S}, {S, S, S, S}, {S, S, S, S}})), 1.0);
  EXPECT_EQ(cooperation_rate(play_choices(spec, {{H, H, H, H}, {H, H, H, H}, {H, H, H, H}})), 0.0);
  // 12 decisions, 6 stag.
  EXPECT_EQ(cooperation_rate(play_choices(spec, {{S, S, H, H}, {S, H, S, H}, {S, H, H, S}})), 0.5);
}

TEST(CooperationRate, PggUsesNormalisedContributionAndIsPermutationInvariant) {
  auto spec = GameSpec::make(GameKind::kPGG, 3);
  EXPECT_EQ(cooperation_rate(play_contributions(spec, {{10, 10, 10, 10}, {10, 10, 10, 10}, {10, 10, 10, 10}})), 0.5);
  const auto a = play_contributions(spec, {{20, 5, 0, 7}, {1, 2, 3, 4}, {20, 20, 0, 0}});
  const auto b = play_contributions(spec, {{7, 0, 5, 20}, {4, 3, 2, 1}, {0, 20, 0, 20}});
  EXPECT_EQ(cooperation_rate(a), cooperation_rate(b));
  EXPECT_DOUBLE_EQ(cooperation_rate(a), 82.0 / 240.0);
}

TEST(CooperationRate, AbortedOrUnfinishedLogIsRejected) {
  auto spec = GameSpec::make(GameKind::kNIPD, 3);
  auto log = play_choices(spec, {{D, D, D, D}});
  EXPECT_THROW(cooperation_rate(log), AnalysisError);
  log = play_choices(spec, {{D, D, D, D}, {D, D, D, D}, {D, D, D, D}});
  log.abort = AbortInfo{"x", 3, Phase::kAct, "garbage"};
  EXPECT_THROW(cooperation_rate(log), AnalysisError);
}

TEST(Trajectory, AllDefectNipd) {
  auto log = play_choices(GameSpec::make(GameKind::kNIPD, 3), {{D, D, D, D}, {D, D, D, D}, {D, D, D, D}});
  EXPECT_EQ(cooperation_trajectory(log), (std::vector<double>{0, 0, 0}));
}

TEST(PayoffStats, HandComputedValues) {
  std::vector<double> xs{1, 2, 3};
  auto s = payoff_stats("c", xs);
  EXPECT_EQ(s.mean_payoff, 2.0);
  EXPECT_EQ(*s.std_payoff, 1.0);
  EXPECT_LE(rel_err(*s.ci95, t_quantile_975_oracle(2) / std::sqrt(3.0)), 1e-9);

  std::vector<double> one{5};
  auto single = payoff_stats("c", one);
  EXPECT_EQ(single.mean_payoff, 5.0);
  EXPECT_FALSE(single.std_payoff);
  EXPECT_FALSE(single.ci95);
  EXPECT_THROW(payoff_stats("c", std::vector<double>{}), AnalysisError);
}

TEST(PayoffStats, TQuantileMatchesIntegrationOracle) {
  for (int dof : {1, 2, 5, 9, 28, 29, 100}) {
    EXPECT_LE(rel_err(t_critical_95(dof), t_quantile_975_oracle(dof)), 1e-9) << dof;
  }
}

TEST(PayoffStats, OrderIndependentCompensatedSum) {
  std::vector<double> xs{1e16, 1.0, -1e16, 3.0};
  std::vector<double> ys{3.0, -1e16, 1.0, 1e16};
  EXPECT_EQ(stable_sum(xs), 4.0);
  EXPECT_EQ(stable_sum(ys), 4.0);
}

TEST(PctVsControl, FormulaAndSelf) {
  EXPECT_EQ(pct_vs_control(150, 200), -25.0);
  EXPECT_EQ(pct_vs_control(200, 200), 0.0);
  EXPECT_THROW(pct_vs_control(1, 0), AnalysisError);
  std::vector<ConditionStats> rows{{"control", 2, 0, 200}, {"full_curriculum", 2, 0, 150}};
  attach_pct_vs_control(rows, "control");
  EXPECT_FALSE(rows[0].pct_vs_control);
  EXPECT_EQ(*rows[1].pct_vs_control, -25.0);
}

TEST(ContributionTrajectory, FlatTensAndRoundOneMean) {
  auto spec = GameSpec::make(GameKind::kPGG, 3);
  std::vector<GameLog> flat(3, play_contributions(spec, {{10, 10, 10, 10}, {10, 10, 10, 10}, {10, 10, 10, 10}}));
  auto series = contribution_trajectory("x", flat);
  ASSERT_EQ(series.points.size(), 3u);
  for (const auto& p : series.points) {
    EXPECT_EQ(p.mean, 10.0);
    EXPECT_EQ(*p.std, 0.0);
    EXPECT_EQ(p.n, 3);
  }
  // Decaying fixture: round means (12, 6, 2) and (8, 4, 0) -> pooled (10, 5, 1).
  std::vector<GameLog> decay{play_contributions(spec, {{12, 12, 12, 12}, {6, 6, 6, 6}, {2, 2, 2, 2}}),
                             play_contributions(spec, {{16, 8, 8, 0}, {4, 4, 4, 4}, {0, 0, 0, 0}})};
  auto d = contribution_trajectory("y", decay);
  EXPECT_EQ(d.points[0].mean, 10.0);
  EXPECT_EQ(d.points[2].mean, 1.0);
  EXPECT_EQ(d.first_last_delta(), -9.0);
  EXPECT_DOUBLE_EQ(*d.points[0].std, std::sqrt(8.0));

  // Mean over rounds equals endowment * cooperation rate of the same logs.
  double round_mean = 0;
  for (const auto& p : d.points) round_mean += p.mean;
  round_mean /= 3;
  const double rate = (cooperation_rate(decay[0]) + cooperation_rate(decay[1])) / 2;
  EXPECT_DOUBLE_EQ(round_mean, 20 * rate);

  std::vector<GameLog> mixed{flat[0], play_contributions(GameSpec::make(GameKind::kPGG, 2), {{1, 1, 1, 1}, {1, 1, 1, 1}})};
  EXPECT_THROW(contribution_trajectory("z", mixed), AnalysisError);
}

TEST(WordFrequency, CountsAndErrors) {
  auto spec = GameSpec::make(GameKind::kStagHuntComm, 3);
  std::vector<GameLog> all_stag{play_choices(spec, {{S, S, S, S}, {S, S, S, S}, {S, S, S, S}})};
  EXPECT_EQ(word_frequency(all_stag), (std::map<std::string, int>{{"stag", 12}}));

  GameState s(spec);
  for (auto words : std::vector<std::vector<std::string>>{{"Stag", "stag", "HARE", "trust"},
                                                          {"stag", "hare", "hare", "stag"},
                                                          {"STAG", "Stag", "stag", "stag"}}) {
    std::vector<ActionRecord> w;
    for (auto& t : words) w.push_back(Word{t});
    s = step(s, Phase::kCommunicate, w).state;
    s = step(s, Phase::kAct, {S, H, H, S}).state;
  }
  std::vector<GameLog> mixed{s.log()};
  EXPECT_EQ(word_frequency(mixed), (std::map<std::string, int>{{"hare", 3}, {"stag", 8}, {"trust", 1}}));
  // 11 stag/hare announcements, 8 kept.
  EXPECT_DOUBLE_EQ(*word_action_consistency(mixed), 8.0 / 11.0);

  std::vector<GameLog> no_comm{play_choices(GameSpec::make(GameKind::kStagHunt, 1), {{S, S, S, S}})};
  EXPECT_THROW(word_frequency(no_comm), AnalysisError);
}

TEST(Csv, ConditionTableFormatAndRoundTrip) {
  std::vector<double> control{210.5, 212.9, 211.7}, full{150.0, 157.2};
  std::vector<ConditionStats> rows{payoff_stats("full_curriculum", full), payoff_stats("control", control)};
  attach_pct_vs_control(rows, "control");
  const auto csv = condition_stats_csv(rows);
  const auto parsed = parse_csv(csv);
  ASSERT_EQ(parsed.size(), 3u);
  EXPECT_EQ(text::join(parsed[0], ","), kConditionStatsHeader);
  EXPECT_EQ(parsed[1][0], "full_curriculum");
  EXPECT_EQ(parsed[1][1], "2");
  EXPECT_EQ(parsed[1][2], "153.6");
  EXPECT_EQ(std::stod(parsed[1][3]), std::stod(text::fixed(*rows[0].std_payoff, 1)));
  EXPECT_EQ(parsed[1][4], text::fixed(*rows[0].ci95, 2));
  EXPECT_EQ(parsed[1][5], text::fixed(100 * (153.6 - 211.7) / 211.7, 1));
  EXPECT_EQ(parsed[2][5], "");
  EXPECT_EQ(csv.back(), '\n');
}

TEST(Csv, TrajectoryRowsAndWordsSorted) {
  auto spec = GameSpec::make(GameKind::kPGG, 2);
  std::vector<GameLog> logs{play_contributions(spec, {{10, 10, 10, 10}, {5, 5, 5, 5}})};
  auto csv = trajectory_csv({contribution_trajectory("control", logs)});
  EXPECT_EQ(csv, "condition,round,mean,std,ci95,n\ncontrol,1,10.0,,,1\ncontrol,2,5.0,,,1\n");
  EXPECT_EQ(word_frequency_csv({{"a", 1}, {"stag", 5}, {"hare", 5}}), "word,count\nhare,5\nstag,5\na,1\n");
}

}  // namespace
}  // namespace dilemma::analysis
