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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dilemma/game/types.hpp"

namespace dilemma {

namespace detail {

inline void require_arity(std::size_t got, std::size_t expected, std::string_view game) {
  if (got != expected) {
    throw GameError(GameErrc::kArity, std::string(game) + " expects " + std::to_string(expected) +
                                          " actions, got " + std::to_string(got));
  }
}

inline bool is_pd_choice(Choice c) { return c == Choice::kCooperate || c == Choice::kDefect; }
inline bool is_stag_choice(Choice c) { return c == Choice::kHuntStag || c == Choice::kHuntHare; }

}  // namespace detail

/// All stag: 10 each. Otherwise stag hunters get 0 and hare hunters get 3.
inline PayoffVector resolve_stag_hunt(std::span<const Choice> choices, std::size_t n = 4) {
  detail::require_arity(choices.size(), n, "Stag Hunt");
  bool all_stag = true;
  for (Choice c : choices) {
    if (!detail::is_stag_choice(c)) {
      throw GameError(GameErrc::kDomain, "Stag Hunt action must be Hunt Stag or Hunt Hare");
    }
    all_stag = all_stag && c == Choice::kHuntStag;
  }
  PayoffVector out;
  out.reserve(n);
  for (Choice c : choices) {
    if (all_stag) {
      out.push_back(Tokens::whole(10));
    } else {
      out.push_back(Tokens::whole(c == Choice::kHuntHare ? 3 : 0));
    }
  }
  return out;
}

/// Standard PD matrix: R=3, P=1, S=0, T=5.
inline std::pair<Tokens, Tokens> resolve_ipd2(Choice a, Choice b) {
  if (!detail::is_pd_choice(a) || !detail::is_pd_choice(b)) {
    throw GameError(GameErrc::kDomain, "IPD action must be Cooperate or Defect");
  }
  const bool ca = a == Choice::kCooperate;
  const bool cb = b == Choice::kCooperate;
  if (ca && cb) return {Tokens::whole(3), Tokens::whole(3)};
  if (!ca && !cb) return {Tokens::whole(1), Tokens::whole(1)};
  if (ca) return {Tokens::whole(0), Tokens::whole(5)};
  return {Tokens::whole(5), Tokens::whole(0)};
}

/// N-player PD. With k = number of *other* cooperators: a cooperator earns 3k;
/// a defector earns 5k + (n-1-k) under PairwiseSum, or 5k + 1 under BasePlusOne.
inline PayoffVector resolve_nipd(std::span<const Choice> choices, NpdPayoffRule rule,
                                 std::size_t n = 4) {
  detail::require_arity(choices.size(), n, "N-player IPD");
  int cooperators = 0;
  for (Choice c : choices) {
    if (!detail::is_pd_choice(c)) {
      throw GameError(GameErrc::kDomain, "IPD action must be Cooperate or Defect");
    }
    cooperators += c == Choice::kCooperate ? 1 : 0;
  }
  const int others = static_cast<int>(n) - 1;
  PayoffVector out;
  out.reserve(n);
  for (Choice c : choices) {
    if (c == Choice::kCooperate) {
      out.push_back(Tokens::whole(3 * (cooperators - 1)));
    } else {
      const int k = cooperators;
      const int base = rule == NpdPayoffRule::kPairwiseSum ? (others - k) : 1;
      out.push_back(Tokens::whole(5 * k + base));
    }
  }
  return out;
}

/// payoff_i = (endowment - c_i) + multiplier * sum(c) / n, exact in tenths.
inline PayoffVector resolve_pgg(std::span<const int> contributions, int endowment,
                                int multiplier_tenths) {
  if (contributions.empty()) throw GameError(GameErrc::kArity, "PGG needs at least one player");
  const auto n = static_cast<std::int64_t>(contributions.size());
  std::int64_t pot = 0;
  for (int c : contributions) {
    if (c < 0 || c > endowment) {
      throw GameError(GameErrc::kDomain, "contribution " + std::to_string(c) +
                                             " outside [0, " + std::to_string(endowment) + "]");
    }
    pot += c;
  }
  const std::int64_t scaled = static_cast<std::int64_t>(multiplier_tenths) * pot;
  if (scaled % n != 0) {
    throw GameError(GameErrc::kDomain, "public share is not exact in tenths of a token");
  }
  const Tokens share = Tokens::from_tenths(scaled / n);
  PayoffVector out;
  out.reserve(contributions.size());
  for (int c : contributions) out.push_back(Tokens::whole(endowment - c) + share);
  return out;
}

inline void validate_allocations(std::span<const PunishmentAllocation> allocations,
                                 std::size_t n) {
  detail::require_arity(allocations.size(), n, "punishment phase");
  for (std::size_t spender = 0; spender < allocations.size(); ++spender) {
    for (const auto& [target, spend] : allocations[spender].spends) {
      if (target < 0 || static_cast<std::size_t>(target) >= n) {
        throw GameError(GameErrc::kDomain, "punishment target " + std::to_string(target + 1) +
                                               " is not a player");
      }
      if (static_cast<std::size_t>(target) == spender) {
        throw GameError(GameErrc::kDomain,
                        "player " + std::to_string(spender + 1) + " cannot punish themself");
      }
      if (spend < 0) throw GameError(GameErrc::kDomain, "negative punishment spend");
    }
  }
}

/// final_i = stage_i - spent_i - ratio * received_i, applied simultaneously.
inline PayoffVector apply_punishments(const PayoffVector& stage_payoffs,
                                      std::span<const PunishmentAllocation> allocations,
                                      int punish_ratio) {
  validate_allocations(allocations, stage_payoffs.size());
  PayoffVector out = stage_payoffs;
  for (std::size_t spender = 0; spender < allocations.size(); ++spender) {
    for (const auto& [target, spend] : allocations[spender].spends) {
      out[spender] -= Tokens::whole(spend);
      out[static_cast<std::size_t>(target)] -= Tokens::whole(static_cast<std::int64_t>(spend) * punish_ratio);
    }
  }
  return out;
}

struct ClampResult {
  std::vector<PunishmentAllocation> allocations;
  std::vector<std::string> warnings;
};

/// Caps each player's total spend at the whole tokens of their stage payoff.
/// Spends are honoured in ascending target order until the budget runs out.
inline ClampResult clamp_punishment_budget(const PayoffVector& stage_payoffs,
                                           std::vector<PunishmentAllocation> allocations) {
  ClampResult result;
  for (std::size_t i = 0; i < allocations.size() && i < stage_payoffs.size(); ++i) {
    const std::int64_t budget = std::max<std::int64_t>(0, stage_payoffs[i].tenths / 10);
    const int requested = allocations[i].total();
    if (requested <= budget) continue;
    std::int64_t remaining = budget;
    for (auto it = allocations[i].spends.begin(); it != allocations[i].spends.end();) {
      const int granted = static_cast<int>(std::min<std::int64_t>(it->second, remaining));
      remaining -= granted;
      if (granted == 0) {
        it = allocations[i].spends.erase(it);
      } else {
        it->second = granted;
        ++it;
      }
    }
    result.warnings.push_back("player " + std::to_string(i + 1) + " requested " +
                              std::to_string(requested) + " punishment tokens; clamped to " +
                              std::to_string(budget));
  }
  result.allocations = std::move(allocations);
  return result;
}

}  // namespace dilemma
