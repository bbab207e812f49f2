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

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dilemma/util/text.hpp"

namespace dilemma {

enum class GameErrc {
  kInvalidSpec,
  kArity,
  kDomain,
  kPhaseMismatch,
  kTerminal,
};

inline std::string_view to_string(GameErrc e) {
  switch (e) {
    case GameErrc::kInvalidSpec: return "invalid_spec";
    case GameErrc::kArity: return "arity";
    case GameErrc::kDomain: return "domain";
    case GameErrc::kPhaseMismatch: return "phase_mismatch";
    case GameErrc::kTerminal: return "terminal";
  }
  return "unknown";
}

class GameError : public std::runtime_error {
 public:
  GameError(GameErrc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  GameErrc code() const noexcept { return code_; }

 private:
  GameErrc code_;
};

// Token amounts in fixed point (tenths of a token). With integer contributions
// and a multiplier expressed in tenths, every payoff in the harness is exact.
struct Tokens {
  std::int64_t tenths = 0;

  static constexpr Tokens whole(std::int64_t n) { return Tokens{n * 10}; }
  static constexpr Tokens from_tenths(std::int64_t t) { return Tokens{t}; }

  double value() const { return static_cast<double>(tenths) / 10.0; }

  // "26" for whole amounts, "25.6" otherwise.
  std::string str() const {
    const std::int64_t whole_part = tenths / 10;
    const std::int64_t frac = tenths % 10;
    if (frac == 0) return std::to_string(whole_part);
    std::string sign = tenths < 0 ? "-" : "";
    const std::int64_t a = tenths < 0 ? -tenths : tenths;
    return sign + std::to_string(a / 10) + "." + std::to_string(a % 10);
  }

  constexpr Tokens& operator+=(Tokens o) { tenths += o.tenths; return *this; }
  constexpr Tokens& operator-=(Tokens o) { tenths -= o.tenths; return *this; }
  friend constexpr Tokens operator+(Tokens a, Tokens b) { return Tokens{a.tenths + b.tenths}; }
  friend constexpr Tokens operator-(Tokens a, Tokens b) { return Tokens{a.tenths - b.tenths}; }
  friend constexpr Tokens operator*(Tokens a, std::int64_t k) { return Tokens{a.tenths * k}; }
  friend constexpr auto operator<=>(const Tokens&, const Tokens&) = default;
};

using PayoffVector = std::vector<Tokens>;

enum class GameKind { kStagHunt, kStagHuntComm, kIPD2, kNIPD, kPGG, kIPGGPunish };
enum class NpdPayoffRule { kPairwiseSum, kBasePlusOne };

inline std::string_view game_name(GameKind k) {
  switch (k) {
    case GameKind::kStagHunt: return "StagHunt";
    case GameKind::kStagHuntComm: return "StagHuntWithCommunication";
    case GameKind::kIPD2: return "IteratedPrisonersDilemma";
    case GameKind::kNIPD: return "NPlayerIteratedPrisonersDilemma";
    case GameKind::kPGG: return "PublicGoodsGame";
    case GameKind::kIPGGPunish: return "PublicGoodsGameWithPunishment";
  }
  return "Unknown";
}

inline GameKind game_kind_from_name(std::string_view name) {
  for (GameKind k : {GameKind::kStagHunt, GameKind::kStagHuntComm, GameKind::kIPD2,
                     GameKind::kNIPD, GameKind::kPGG, GameKind::kIPGGPunish}) {
    if (game_name(k) == name) return k;
  }
  throw GameError(GameErrc::kInvalidSpec, "unknown game kind '" + std::string(name) + "'");
}

inline std::string_view to_string(NpdPayoffRule r) {
  return r == NpdPayoffRule::kPairwiseSum ? "PairwiseSum" : "BasePlusOne";
}

inline NpdPayoffRule npd_rule_from_name(std::string_view name) {
  if (name == "PairwiseSum") return NpdPayoffRule::kPairwiseSum;
  if (name == "BasePlusOne") return NpdPayoffRule::kBasePlusOne;
  throw GameError(GameErrc::kInvalidSpec, "unknown NIPD payoff rule '" + std::string(name) + "'");
}

inline bool is_pgg_family(GameKind k) {
  return k == GameKind::kPGG || k == GameKind::kIPGGPunish;
}
inline bool is_stag_family(GameKind k) {
  return k == GameKind::kStagHunt || k == GameKind::kStagHuntComm;
}

struct GameSpec {
  GameKind kind = GameKind::kPGG;
  int n_players = 4;
  int rounds = 3;
  int endowment = 20;
  int multiplier_tenths = 16;
  int punish_ratio = 3;
  NpdPayoffRule npd_rule = NpdPayoffRule::kPairwiseSum;

  static GameSpec make(GameKind kind, int rounds) {
    GameSpec s;
    s.kind = kind;
    s.rounds = rounds;
    s.n_players = kind == GameKind::kIPD2 ? 2 : 4;
    return s;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw GameError(GameErrc::kInvalidSpec, m); };
    const int expected_players = kind == GameKind::kIPD2 ? 2 : 4;
    if (n_players != expected_players) {
      fail(std::string(game_name(kind)) + " requires " + std::to_string(expected_players) +
           " players, got " + std::to_string(n_players));
    }
    if (rounds < 1) fail("rounds must be >= 1");
    if (endowment <= 0) fail("endowment must be positive");
    if (punish_ratio <= 0) fail("punish_ratio must be positive");
    if (multiplier_tenths <= 0) fail("multiplier must be positive");
    if (multiplier_tenths >= 10 * n_players) fail("multiplier / n_players must be < 1");
    // Keeps PGG payoffs exact in tenths for every integer contribution profile.
    if (multiplier_tenths % n_players != 0) {
      fail("multiplier (in tenths) must be divisible by n_players");
    }
  }

  double multiplier() const { return multiplier_tenths / 10.0; }

  friend bool operator==(const GameSpec&, const GameSpec&) = default;
};

enum class Choice { kCooperate, kDefect, kHuntStag, kHuntHare };

inline std::string_view to_string(Choice c) {
  switch (c) {
    case Choice::kCooperate: return "Cooperate";
    case Choice::kDefect: return "Defect";
    case Choice::kHuntStag: return "Hunt Stag";
    case Choice::kHuntHare: return "Hunt Hare";
  }
  return "?";
}

inline bool is_cooperative(Choice c) {
  return c == Choice::kCooperate || c == Choice::kHuntStag;
}

struct Contribution {
  int amount = 0;
  friend bool operator==(const Contribution&, const Contribution&) = default;
};

// Target player index (0-based) -> tokens spent on that target.
struct PunishmentAllocation {
  std::map<int, int> spends;

  int total() const {
    int t = 0;
    for (const auto& [target, spend] : spends) t += spend;
    return t;
  }
  friend bool operator==(const PunishmentAllocation&, const PunishmentAllocation&) = default;
};

struct Word {
  std::string text;
  friend bool operator==(const Word&, const Word&) = default;
};

using ActionRecord = std::variant<Choice, Contribution, PunishmentAllocation, Word>;

enum class Phase { kCommunicate, kAct, kContribute, kPunish };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kCommunicate: return "communicate";
    case Phase::kAct: return "act";
    case Phase::kContribute: return "contribute";
    case Phase::kPunish: return "punish";
  }
  return "?";
}

inline Phase phase_from_name(std::string_view name) {
  for (Phase p : {Phase::kCommunicate, Phase::kAct, Phase::kContribute, Phase::kPunish}) {
    if (to_string(p) == name) return p;
  }
  throw GameError(GameErrc::kPhaseMismatch, "unknown phase '" + std::string(name) + "'");
}

// Phases of one round, in order.
inline std::vector<Phase> phases_of(GameKind k) {
  switch (k) {
    case GameKind::kStagHuntComm: return {Phase::kCommunicate, Phase::kAct};
    case GameKind::kPGG: return {Phase::kContribute};
    case GameKind::kIPGGPunish: return {Phase::kContribute, Phase::kPunish};
    default: return {Phase::kAct};
  }
}

inline std::string describe(const ActionRecord& a) {
  struct Visitor {
    std::string operator()(Choice c) const { return std::string(to_string(c)); }
    std::string operator()(const Contribution& c) const { return std::to_string(c.amount); }
    std::string operator()(const PunishmentAllocation& p) const {
      if (p.spends.empty()) return "none";
      std::vector<std::string> parts;
      for (const auto& [t, s] : p.spends) {
        parts.push_back("P" + std::to_string(t + 1) + ":" + std::to_string(s));
      }
      return text::join(parts, " ");
    }
    std::string operator()(const Word& w) const { return w.text; }
  };
  return std::visit(Visitor{}, a);
}

}  // namespace dilemma
