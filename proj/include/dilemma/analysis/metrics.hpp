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
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "dilemma/game/state.hpp"
#include "dilemma/util/text.hpp"

namespace dilemma::analysis {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Neumaier-compensated sum; result does not depend on summation order to
// within the last bit for the sample sizes used here.
inline double stable_sum(std::span<const double> xs) {
  double sum = 0.0;
  double c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw AnalysisError("mean of empty sample");
  return stable_sum(xs) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n-1); two-pass.
inline std::optional<double> sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  const double m = mean(xs);
  std::vector<double> sq;
  sq.reserve(xs.size());
  for (double x : xs) sq.push_back((x - m) * (x - m));
  return std::sqrt(stable_sum(sq) / static_cast<double>(xs.size() - 1));
}

/// Two-sided 95% critical value of Student's t with `dof` degrees of freedom.
inline double t_critical_95(int dof) {
  if (dof < 1) throw AnalysisError("t distribution needs dof >= 1");
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

inline std::optional<double> ci95_half_width(std::span<const double> xs) {
  const auto sd = sample_std(xs);
  if (!sd) return std::nullopt;
  const auto n = static_cast<double>(xs.size());
  return t_critical_95(static_cast<int>(xs.size()) - 1) * *sd / std::sqrt(n);
}

inline double pct_vs_control(double mean_value, double control_mean) {
  if (control_mean == 0.0) throw AnalysisError("control mean is zero; percentage undefined");
  return 100.0 * (mean_value - control_mean) / control_mean;
}

// ---------------------------------------------------------------- per-log metrics

inline void require_complete(const GameLog& log) {
  if (log.aborted()) throw AnalysisError("log is aborted");
  if (!log.complete()) throw AnalysisError("log is incomplete");
}

/// Numerator/denominator of the cooperation measure for one round.
///
/// Binary games count cooperative choices over decisions; the PGG family sums
/// contributions over the total endowment on offer.
inline std::pair<long long, long long> cooperation_counts(const GameSpec& spec, const RoundRecord& r) {
  long long num = 0;
  long long den = 0;
  if (is_pgg_family(spec.kind)) {
    const PhaseActions* pa = r.find_phase(Phase::kContribute);
    if (pa == nullptr) throw AnalysisError("round without contributions");
    for (const auto& a : pa->actions) {
      num += std::get<Contribution>(a).amount;
      den += spec.endowment;
    }
  } else {
    const PhaseActions* pa = r.find_phase(Phase::kAct);
    if (pa == nullptr) throw AnalysisError("round without actions");
    for (const auto& a : pa->actions) {
      num += is_cooperative(std::get<Choice>(a)) ? 1 : 0;
      den += 1;
    }
  }
  return {num, den};
}

/// Fraction in [0, 1] over every player-round decision of a completed log.
inline double cooperation_rate(const GameLog& log) {
  require_complete(log);
  long long num = 0;
  long long den = 0;
  for (const auto& r : log.rounds) {
    auto [n, d] = cooperation_counts(log.spec, r);
    num += n;
    den += d;
  }
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline std::vector<double> cooperation_trajectory(const GameLog& log) {
  require_complete(log);
  std::vector<double> out;
  for (const auto& r : log.rounds) {
    auto [n, d] = cooperation_counts(log.spec, r);
    out.push_back(d == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d));
  }
  return out;
}

/// Per-trial payoff: mean of the players' final totals.
inline double average_player_payoff(const GameLog& log) {
  require_complete(log);
  std::vector<double> v;
  for (const auto& t : log.totals) v.push_back(t.value());
  return mean(v);
}

/// Mean contribution (PGG family) or cooperation fraction (binary games) for one round.
inline double round_level(const GameSpec& spec, const RoundRecord& r) {
  auto [num, den] = cooperation_counts(spec, r);
  if (is_pgg_family(spec.kind)) {
    return static_cast<double>(num) / static_cast<double>(spec.n_players);
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

// ------------------------------------------------------------ cross-trial stats

struct ConditionStats {
  std::string condition;
  int n_completed = 0;
  int n_aborted = 0;
  double mean_payoff = 0;
  std::optional<double> std_payoff;
  std::optional<double> ci95;
  std::optional<double> pct_vs_control;
  double cooperation_rate = 0;
};

inline ConditionStats payoff_stats(std::string condition, std::span<const double> per_trial) {
  if (per_trial.empty()) throw AnalysisError("no completed trials for " + condition);
  ConditionStats s;
  s.condition = std::move(condition);
  s.n_completed = static_cast<int>(per_trial.size());
  s.mean_payoff = mean(per_trial);
  s.std_payoff = sample_std(per_trial);
  s.ci95 = ci95_half_width(per_trial);
  return s;
}

struct TrajectoryPoint {
  int round = 0;  // 1-based
  double mean = 0;
  std::optional<double> std;
  std::optional<double> ci95;
  int n = 0;
};

struct TrajectorySeries {
  std::string condition;
  GameKind kind = GameKind::kIPGGPunish;
  std::vector<TrajectoryPoint> points;

  double first_last_delta() const {
    if (points.empty()) throw AnalysisError("empty trajectory");
    return points.back().mean - points.front().mean;
  }
};

/// Round-wise mean over players; per-trial round means are the samples for std and CI.
inline TrajectorySeries contribution_trajectory(std::string condition, std::span<const GameLog> logs) {
  if (logs.empty()) throw AnalysisError("no logs for trajectory");
  const GameSpec& spec = logs.front().spec;
  for (const auto& log : logs) {
    require_complete(log);
    if (!(log.spec == spec)) throw AnalysisError("trajectory over logs with different game specs");
  }
  TrajectorySeries series{std::move(condition), spec.kind, {}};
  for (int r = 0; r < spec.rounds; ++r) {
    std::vector<double> samples;
    for (const auto& log : logs) samples.push_back(round_level(spec, log.rounds[static_cast<std::size_t>(r)]));
    series.points.push_back({r + 1, mean(samples), sample_std(samples), ci95_half_width(samples),
                             static_cast<int>(samples.size())});
  }
  return series;
}

/// Case-folded counts of broadcast words over communication Stag Hunt logs.
inline std::map<std::string, int> word_frequency(std::span<const GameLog> logs) {
  std::map<std::string, int> counts;
  for (const auto& log : logs) {
    if (log.spec.kind != GameKind::kStagHuntComm) {
      throw AnalysisError("word frequency needs communication Stag Hunt logs, got " +
                          std::string(game_name(log.spec.kind)));
    }
    for (const auto& r : log.rounds) {
      for (const auto& w : r.broadcast_words) ++counts[text::to_lower(w)];
    }
  }
  if (counts.empty()) throw AnalysisError("no broadcast words in input");
  return counts;
}

/// Share of player-rounds whose action matched the announced word ("stag"/"hare").
/// Rounds with other words are skipped; nullopt when nothing was comparable.
inline std::optional<double> word_action_consistency(std::span<const GameLog> logs) {
  long long matched = 0;
  long long total = 0;
  for (const auto& log : logs) {
    for (const auto& r : log.rounds) {
      const PhaseActions* act = r.find_phase(Phase::kAct);
      if (act == nullptr || r.broadcast_words.size() != act->actions.size()) continue;
      for (std::size_t i = 0; i < act->actions.size(); ++i) {
        const std::string w = text::to_lower(r.broadcast_words[i]);
        if (w != "stag" && w != "hare") continue;
        const bool said_stag = w == "stag";
        ++total;
        if (said_stag == is_cooperative(std::get<Choice>(act->actions[i]))) ++matched;
      }
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace dilemma::analysis
