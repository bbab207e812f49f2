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

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dilemma/game/payoffs.hpp"
#include "dilemma/game/types.hpp"

namespace dilemma {

struct PhaseActions {
  Phase phase = Phase::kAct;
  std::vector<ActionRecord> actions;  // one per player, in seat order
  friend bool operator==(const PhaseActions&, const PhaseActions&) = default;
};

struct RoundRecord {
  int round_index = 0;  // 1-based
  std::vector<PhaseActions> phases;
  // Contribution-stage payoffs for the PGG family; equal to `payoffs` elsewhere.
  PayoffVector stage_payoffs;
  PayoffVector payoffs;
  std::vector<std::string> broadcast_words;  // StagHuntComm only
  std::vector<std::string> warnings;

  const PhaseActions* find_phase(Phase p) const {
    for (const auto& pa : phases) {
      if (pa.phase == p) return &pa;
    }
    return nullptr;
  }
  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct AbortInfo {
  std::string agent_id;
  int round = 0;
  Phase phase = Phase::kAct;
  std::string cause;
  friend bool operator==(const AbortInfo&, const AbortInfo&) = default;
};

struct GameLog {
  GameSpec spec;
  std::vector<RoundRecord> rounds;
  PayoffVector totals;
  std::optional<AbortInfo> abort;

  bool aborted() const { return abort.has_value(); }
  bool complete() const {
    return !aborted() && static_cast<int>(rounds.size()) == spec.rounds;
  }
  friend bool operator==(const GameLog&, const GameLog&) = default;
};

class GameState {
 public:
  explicit GameState(GameSpec spec) {
    spec.validate();
    log_.spec = spec;
    log_.totals.assign(static_cast<std::size_t>(spec.n_players), Tokens{});
  }

  const GameSpec& spec() const { return log_.spec; }
  const GameLog& log() const { return log_; }
  // Partially played round (e.g. contributions made, punishment pending).
  const std::optional<RoundRecord>& pending() const { return pending_; }

  int current_round() const { return static_cast<int>(log_.rounds.size()) + 1; }
  Phase current_phase() const { return phases_of(spec().kind)[phase_index_]; }

  bool is_terminal() const {
    return log_.aborted() || static_cast<int>(log_.rounds.size()) >= spec().rounds;
  }

  GameState aborted(AbortInfo info) const {
    GameState s = *this;
    s.log_.abort = std::move(info);
    return s;
  }

 private:
  friend struct StepOutcome step(GameState state, Phase phase, std::vector<ActionRecord> actions);

  GameLog log_;
  std::optional<RoundRecord> pending_;
  std::size_t phase_index_ = 0;
};

inline bool is_terminal(const GameState& state) { return state.is_terminal(); }

struct StepOutcome {
  GameState state;
  std::optional<RoundRecord> completed;  // set when the step finished a round
};

namespace detail {

template <typename T>
std::vector<T> unpack(const std::vector<ActionRecord>& actions, Phase phase) {
  std::vector<T> out;
  out.reserve(actions.size());
  for (const auto& a : actions) {
    const T* v = std::get_if<T>(&a);
    if (v == nullptr) {
      throw GameError(GameErrc::kPhaseMismatch,
                      "action does not match the " + std::string(to_string(phase)) + " phase");
    }
    out.push_back(*v);
  }
  return out;
}

inline PayoffVector resolve_choices(const GameSpec& spec, const std::vector<Choice>& choices) {
  const auto n = static_cast<std::size_t>(spec.n_players);
  switch (spec.kind) {
    case GameKind::kStagHunt:
    case GameKind::kStagHuntComm:
      return resolve_stag_hunt(choices, n);
    case GameKind::kIPD2: {
      require_arity(choices.size(), 2, "IPD");
      auto [a, b] = resolve_ipd2(choices[0], choices[1]);
      return {a, b};
    }
    case GameKind::kNIPD:
      return resolve_nipd(choices, spec.npd_rule, n);
    default:
      throw GameError(GameErrc::kPhaseMismatch, "choice actions are not valid in a PGG");
  }
}

}  // namespace detail

/// Applies one phase of simultaneous actions. Returns the advanced state and,
/// when the phase closed a round, the finished RoundRecord.
inline StepOutcome step(GameState state, Phase phase, std::vector<ActionRecord> actions) {
  if (state.is_terminal()) {
    throw GameError(GameErrc::kTerminal, "game is already terminal");
  }
  if (phase != state.current_phase()) {
    throw GameError(GameErrc::kPhaseMismatch,
                    "expected " + std::string(to_string(state.current_phase())) + " phase, got " +
                        std::string(to_string(phase)));
  }
  const GameSpec& spec = state.spec();
  const auto n = static_cast<std::size_t>(spec.n_players);
  detail::require_arity(actions.size(), n, std::string(to_string(phase)) + " phase");

  if (!state.pending_) {
    state.pending_ = RoundRecord{};
    state.pending_->round_index = state.current_round();
  }
  RoundRecord& round = *state.pending_;
  bool round_done = false;

  switch (phase) {
    case Phase::kCommunicate: {
      auto words = detail::unpack<Word>(actions, phase);
      for (const auto& w : words) {
        if (w.text.empty() || std::any_of(w.text.begin(), w.text.end(), text::is_space)) {
          throw GameError(GameErrc::kDomain, "broadcast must be one non-empty word");
        }
        round.broadcast_words.push_back(w.text);
      }
      break;
    }
    case Phase::kAct: {
      const auto choices = detail::unpack<Choice>(actions, phase);
      round.payoffs = detail::resolve_choices(spec, choices);
      round.stage_payoffs = round.payoffs;
      round_done = true;
      break;
    }
    case Phase::kContribute: {
      const auto contribs = detail::unpack<Contribution>(actions, phase);
      std::vector<int> amounts;
      for (const auto& c : contribs) amounts.push_back(c.amount);
      round.stage_payoffs = resolve_pgg(amounts, spec.endowment, spec.multiplier_tenths);
      round.payoffs = round.stage_payoffs;
      round_done = spec.kind == GameKind::kPGG;
      break;
    }
    case Phase::kPunish: {
      auto allocations = detail::unpack<PunishmentAllocation>(actions, phase);
      validate_allocations(allocations, n);
      ClampResult clamped = clamp_punishment_budget(round.stage_payoffs, std::move(allocations));
      actions.assign(clamped.allocations.begin(), clamped.allocations.end());
      round.payoffs = apply_punishments(round.stage_payoffs, clamped.allocations, spec.punish_ratio);
      for (auto& w : clamped.warnings) round.warnings.push_back(std::move(w));
      round_done = true;
      break;
    }
  }

  round.phases.push_back(PhaseActions{phase, std::move(actions)});

  StepOutcome outcome{std::move(state), std::nullopt};
  GameState& next = outcome.state;
  if (round_done) {
    for (std::size_t i = 0; i < n; ++i) next.log_.totals[i] += next.pending_->payoffs[i];
    next.log_.rounds.push_back(*next.pending_);
    outcome.completed = *next.pending_;
    next.pending_.reset();
    next.phase_index_ = 0;
  } else {
    ++next.phase_index_;
  }
  return outcome;
}

}  // namespace dilemma
