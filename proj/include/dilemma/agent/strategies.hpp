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
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "dilemma/agent/observation.hpp"
#include "dilemma/util/rng.hpp"

namespace dilemma {

class StrategyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class StrategyKind {
  kAlwaysCooperate,
  kAlwaysDefect,
  kTitForTat,
  kGrimTrigger,
  kRandomBernoulli,
  kFixedContribution,
  kMatchMeanContribution,
  kNoPunish,
  kPunishBelowMean,
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::kAlwaysCooperate;
  double probability = 0.5;  // RandomBernoulli: P(cooperate)
  int amount = 0;            // FixedContribution amount, PunishBelowMean spend

  static StrategySpec always_cooperate() { return {StrategyKind::kAlwaysCooperate}; }
  static StrategySpec always_defect() { return {StrategyKind::kAlwaysDefect}; }
  static StrategySpec tit_for_tat() { return {StrategyKind::kTitForTat}; }
  static StrategySpec grim_trigger() { return {StrategyKind::kGrimTrigger}; }
  static StrategySpec random_bernoulli(double p) { return {StrategyKind::kRandomBernoulli, p}; }
  static StrategySpec fixed_contribution(int k) { return {StrategyKind::kFixedContribution, 0.5, k}; }
  static StrategySpec match_mean_contribution() { return {StrategyKind::kMatchMeanContribution}; }
  static StrategySpec no_punish() { return {StrategyKind::kNoPunish}; }
  static StrategySpec punish_below_mean(int spend) { return {StrategyKind::kPunishBelowMean, 0.5, spend}; }

  bool binary() const {
    return kind == StrategyKind::kAlwaysCooperate || kind == StrategyKind::kAlwaysDefect ||
           kind == StrategyKind::kTitForTat || kind == StrategyKind::kGrimTrigger ||
           kind == StrategyKind::kRandomBernoulli;
  }
  bool contributes() const {
    return kind == StrategyKind::kFixedContribution || kind == StrategyKind::kMatchMeanContribution;
  }
  bool punishes() const {
    return kind == StrategyKind::kNoPunish || kind == StrategyKind::kPunishBelowMean;
  }

  std::string name() const {
    switch (kind) {
      case StrategyKind::kAlwaysCooperate: return "AlwaysCooperate";
      case StrategyKind::kAlwaysDefect: return "AlwaysDefect";
      case StrategyKind::kTitForTat: return "TitForTat";
      case StrategyKind::kGrimTrigger: return "GrimTrigger";
      case StrategyKind::kRandomBernoulli: return "RandomBernoulli";
      case StrategyKind::kFixedContribution: return "FixedContribution";
      case StrategyKind::kMatchMeanContribution: return "MatchMeanContribution";
      case StrategyKind::kNoPunish: return "NoPunish";
      case StrategyKind::kPunishBelowMean: return "PunishBelowMean";
    }
    return "?";
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", name()}};
    if (kind == StrategyKind::kRandomBernoulli) j["p"] = probability;
    if (kind == StrategyKind::kFixedContribution || kind == StrategyKind::kPunishBelowMean) {
      j["amount"] = amount;
    }
    return j;
  }

  static StrategySpec from_json(const nlohmann::json& j) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "AlwaysCooperate") return always_cooperate();
    if (k == "AlwaysDefect") return always_defect();
    if (k == "TitForTat") return tit_for_tat();
    if (k == "GrimTrigger") return grim_trigger();
    if (k == "RandomBernoulli") {
      const double p = j.value("p", 0.5);
      if (!(p >= 0.0 && p <= 1.0)) throw StrategyError("RandomBernoulli p must be in [0, 1]");
      return random_bernoulli(p);
    }
    if (k == "FixedContribution") return fixed_contribution(j.at("amount").get<int>());
    if (k == "MatchMeanContribution") return match_mean_contribution();
    if (k == "NoPunish") return no_punish();
    if (k == "PunishBelowMean") return punish_below_mean(j.value("amount", 1));
    throw StrategyError("unknown strategy '" + k + "'");
  }
};

namespace detail {

inline bool others_defected(const RoundRecord& r, int self) {
  const PhaseActions* act = r.find_phase(Phase::kAct);
  if (act == nullptr) return false;
  for (std::size_t i = 0; i < act->actions.size(); ++i) {
    if (static_cast<int>(i) == self) continue;
    if (const auto* c = std::get_if<Choice>(&act->actions[i]); c && !is_cooperative(*c)) return true;
  }
  return false;
}

inline bool intends_to_cooperate(const StrategySpec& s, const Observation& obs, Rng& rng) {
  switch (s.kind) {
    case StrategyKind::kAlwaysCooperate: return true;
    case StrategyKind::kAlwaysDefect: return false;
    case StrategyKind::kTitForTat:
      return obs.history.empty() || !others_defected(obs.history.back(), obs.player);
    case StrategyKind::kGrimTrigger:
      for (const auto& r : obs.history) {
        if (others_defected(r, obs.player)) return false;
      }
      return true;
    case StrategyKind::kRandomBernoulli: return rng.bernoulli(s.probability);
    default: throw StrategyError(s.name() + " has no binary decision");
  }
}

inline std::vector<int> contributions_of(const RoundRecord& r) {
  std::vector<int> out;
  if (const PhaseActions* pa = r.find_phase(Phase::kContribute)) {
    for (const auto& a : pa->actions) out.push_back(std::get<Contribution>(a).amount);
  }
  return out;
}

}  // namespace detail

/// Deterministic given (strategy, observation, rng state).
///
/// Binary strategies play Cooperate/Hunt Stag or Defect/Hunt Hare and, in a
/// communication phase, broadcast "stag" or "hare" to match. In N-player games
/// TitForTat retaliates if any other player defected last round.
inline ActionRecord scripted_decide(const StrategySpec& s, const Observation& obs, Rng& rng) {
  const bool stag = is_stag_family(obs.spec.kind);
  switch (obs.phase) {
    case Phase::kAct:
    case Phase::kCommunicate: {
      if (!s.binary()) throw StrategyError(s.name() + " cannot play a binary-choice phase");
      const bool coop = detail::intends_to_cooperate(s, obs, rng);
      if (obs.phase == Phase::kCommunicate) return Word{coop ? "stag" : "hare"};
      if (stag) return coop ? Choice::kHuntStag : Choice::kHuntHare;
      return coop ? Choice::kCooperate : Choice::kDefect;
    }
    case Phase::kContribute: {
      if (s.kind == StrategyKind::kFixedContribution) {
        if (s.amount < 0 || s.amount > obs.spec.endowment) {
          throw StrategyError("FixedContribution amount outside [0, endowment]");
        }
        return Contribution{s.amount};
      }
      if (s.kind == StrategyKind::kMatchMeanContribution) {
        if (obs.history.empty()) return Contribution{obs.spec.endowment / 2};
        const auto c = detail::contributions_of(obs.history.back());
        int sum = 0;
        int n = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
          if (static_cast<int>(i) == obs.player) continue;
          sum += c[i];
          ++n;
        }
        // Round half up, in integers.
        return Contribution{n == 0 ? obs.spec.endowment / 2 : (2 * sum + n) / (2 * n)};
      }
      throw StrategyError(s.name() + " cannot play a contribution phase");
    }
    case Phase::kPunish: {
      if (s.kind == StrategyKind::kNoPunish) return PunishmentAllocation{};
      if (s.kind == StrategyKind::kPunishBelowMean) {
        if (!obs.current) throw StrategyError("punishment phase without contributions");
        const auto c = detail::contributions_of(*obs.current);
        int sum = 0;
        for (int x : c) sum += x;
        PunishmentAllocation alloc;
        for (std::size_t i = 0; i < c.size(); ++i) {
          // c_i < sum / n, compared without division.
          if (static_cast<int>(i) != obs.player && c[i] * static_cast<int>(c.size()) < sum && s.amount > 0) {
            alloc.spends[static_cast<int>(i)] = s.amount;
          }
        }
        return alloc;
      }
      throw StrategyError(s.name() + " cannot play a punishment phase");
    }
  }
  throw StrategyError("unknown phase");
}

}  // namespace dilemma
