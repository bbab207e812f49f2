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

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dilemma/agent/prompt.hpp"
#include "dilemma/analysis/metrics.hpp"
#include "dilemma/curriculum/lessons.hpp"
#include "dilemma/orchestrator/agents.hpp"
#include "dilemma/orchestrator/events.hpp"

namespace dilemma::orchestrator {

inline constexpr int kDefaultRetryLimit = 3;

/// Appended to the unchanged prompt when a reply could not be parsed.
inline std::string format_reminder(const std::string& cause) {
  return "\n\nFORMAT REMINDER: your previous reply could not be used (" + cause +
         "). Reason briefly, then end with exactly one JSON object in the format shown above.";
}

/// Uniform selection of n agents without replacement, in random seat order.
inline std::vector<int> assign_roles(std::size_t pool_size, int n_players, Rng& rng) {
  if (n_players < 1 || pool_size < static_cast<std::size_t>(n_players)) {
    throw ConfigError("agent pool has " + std::to_string(pool_size) + " agents but " +
                      std::to_string(n_players) + " roles must be filled");
  }
  std::vector<int> idx(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) idx[i] = static_cast<int>(i);
  shuffle(std::span<int>(idx), rng);
  idx.resize(static_cast<std::size_t>(n_players));
  return idx;
}

using ObservationHook = std::function<void(const Observation&)>;

struct GameContext {
  std::string trial_id = "game";
  int stage = 1;
  int retry_limit = kDefaultRetryLimit;
  EventSink* sink = nullptr;
  ObservationHook on_observation;
};

namespace detail {

inline Event base_event(std::string_view kind, const GameContext& ctx) {
  Event e;
  e["kind"] = std::string(kind);
  e["trial_id"] = ctx.trial_id;
  e["stage"] = ctx.stage;
  return e;
}

inline void emit(const GameContext& ctx, const Event& e) {
  if (ctx.sink != nullptr) ctx.sink->emit(e);
}

inline nlohmann::ordered_json calls_json(const std::vector<llm::ChatExchange>& calls) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& c : calls) {
    auto j = c.to_json();
    j.erase("request");  // the prompt event already carries the text
    j.erase("response_text");
    a.push_back(std::move(j));
  }
  return a;
}

}  // namespace detail

/// Plays one game to completion or abort. Every seat sees observations built
/// from the same state before anyone's action for the phase is applied.
inline GameLog run_game(const GameSpec& spec, const std::vector<Agent*>& seats,
                        const std::vector<std::string>& lessons, const GameContext& ctx) {
  if (static_cast<int>(seats.size()) != spec.n_players) {
    throw ConfigError("game needs " + std::to_string(spec.n_players) + " seated agents");
  }
  GameState state(spec);
  while (!state.is_terminal()) {
    const Phase phase = state.current_phase();
    const int round = state.current_round();
    std::vector<Observation> observations;
    for (int seat = 0; seat < spec.n_players; ++seat) {
      observations.push_back(make_observation(state, seat, lessons));
      if (ctx.on_observation) ctx.on_observation(observations.back());
    }

    std::vector<ActionRecord> actions;
    for (int seat = 0; seat < spec.n_players; ++seat) {
      Agent& agent = *seats[static_cast<std::size_t>(seat)];
      const Observation& obs = observations[static_cast<std::size_t>(seat)];
      const std::string prompt = render_prompt(obs);
      std::optional<ActionRecord> action;
      std::string cause;
      for (int attempt = 1; attempt <= 1 + ctx.retry_limit && !action; ++attempt) {
        const std::string text = attempt == 1 ? prompt : prompt + format_reminder(cause);
        Event p = detail::base_event("prompt", ctx);
        p["round"] = round;
        p["phase"] = std::string(to_string(phase));
        p["player_id"] = seat + 1;
        p["agent_id"] = agent.id();
        p["attempt"] = attempt;
        p["text"] = text;
        detail::emit(ctx, p);

        AgentReply reply = agent.respond(obs, text);
        std::string error;
        if (reply.error) {
          error = *reply.error;
        } else {
          try {
            action = parse_response(reply.text, phase, spec, seat).action;
          } catch (const ParseError& e) {
            error = e.what();
          }
        }
        Event x = detail::base_event("exchange", ctx);
        x["round"] = round;
        x["phase"] = std::string(to_string(phase));
        x["player_id"] = seat + 1;
        x["agent_id"] = agent.id();
        x["attempt"] = attempt;
        x["response_text"] = reply.text;
        x["calls"] = detail::calls_json(reply.calls);
        x["parsed"] = action.has_value();
        x["error"] = error;
        detail::emit(ctx, x);

        if (reply.error) {
          return state.aborted({agent.id(), round, phase, "gateway error: " + error}).log();
        }
        cause = error;
      }
      if (!action) {
        return state
            .aborted({agent.id(), round, phase,
                      "no parseable reply after " + std::to_string(1 + ctx.retry_limit) + " attempts: " + cause})
            .log();
      }
      actions.push_back(std::move(*action));
    }

    StepOutcome out = [&] {
      try {
        return step(state, phase, std::move(actions));
      } catch (const GameError& e) {
        return StepOutcome{state.aborted({"engine", round, phase, e.what()}), std::nullopt};
      }
    }();
    state = std::move(out.state);
    if (out.completed) {
      Event r = detail::base_event("round", ctx);
      const auto body = round_json(*out.completed);
      for (const auto& [k, v] : body.items()) r[k] = v;
      r["totals"] = tokens_json(state.log().totals);
      detail::emit(ctx, r);
    }
  }
  return state.log();
}

// -------------------------------------------------------------------- trials

enum class TrialStatus { kCompleted, kAborted };

struct TrialAbort {
  std::string reason;
  int stage = 0;
  int round = 0;
  std::string phase;
  std::string agent_id;

  nlohmann::ordered_json to_json() const {
    return {{"reason", reason}, {"stage", stage}, {"round", round}, {"phase", phase}, {"agent_id", agent_id}};
  }
};

struct FinalMetrics {
  double avg_payoff = 0;
  double cooperation_rate = 0;
  PayoffVector totals;
};

struct TrialResult {
  std::string trial_id;
  std::string condition;
  int trial_index = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> role_assignment;  // player k -> role_assignment[k-1]
  std::vector<GameLog> stage_logs;
  std::vector<curriculum::Lesson> lessons;
  TrialStatus status = TrialStatus::kCompleted;
  std::optional<TrialAbort> abort;
  std::optional<FinalMetrics> final_metrics;

  bool completed() const { return status == TrialStatus::kCompleted; }
};

using LessonGeneratorFactory = std::function<std::unique_ptr<curriculum::LessonGenerator>()>;

struct TrialOptions {
  RunMode mode = RunMode::kMock;
  int retry_limit = kDefaultRetryLimit;
  LessonGeneratorFactory lesson_generator = [] { return std::make_unique<curriculum::StubLessonGenerator>(); };
  curriculum::Clock clock = curriculum::fixed_clock();
  llm::ChatClient::Options client_options;
  ObservationHook on_observation;
};

inline std::string trial_id_for(curriculum::ConditionName c, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", index + 1);
  return std::string(to_string(c)) + "-" + buf;
}

inline std::uint64_t trial_seed(std::uint64_t master, curriculum::ConditionName c, int index) {
  return derive_seed(master, to_string(c), static_cast<std::uint64_t>(index));
}

/// A trial with its seating already decided: roles[k] plays as Player k+1.
struct TrialPlan {
  std::string trial_id;
  std::string condition;
  std::vector<curriculum::StageSpec> stages;
  std::vector<AgentSpec> roles;
};

/// Runs every stage in order, generating and accumulating a lesson after each
/// non-final stage. Failures abort the trial but keep the partial logs.
inline TrialResult run_plan(const TrialPlan& plan, int trial_index, std::uint64_t seed, EventSink& sink,
                            const TrialOptions& opts = {}) {
  TrialResult result;
  result.trial_id = plan.trial_id;
  result.condition = plan.condition;
  result.trial_index = trial_index;
  result.seed = seed;

  int n_roles = 0;
  for (const auto& s : plan.stages) n_roles = std::max(n_roles, s.game.n_players);
  if (static_cast<int>(plan.roles.size()) < n_roles) throw ConfigError("trial plan has too few roles");

  AgentBuildContext build{opts.mode, trial_index, seed, opts.client_options};
  std::vector<std::unique_ptr<Agent>> agents;
  for (const auto& spec : plan.roles) {
    agents.push_back(make_agent(spec, build));
    result.role_assignment.push_back(agents.back()->id());
  }

  Event start;
  start["kind"] = "trial_start";
  start["trial_id"] = result.trial_id;
  start["condition"] = result.condition;
  start["trial_index"] = trial_index;
  start["seed"] = seed;
  start["mode"] = opts.mode == RunMode::kMock ? "mock" : "live";
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : plan.stages) {
    stages.push_back({{"stage", s.stage_index}, {"game", std::string(game_name(s.game.kind))},
                      {"rounds", s.game.rounds}, {"n_players", s.game.n_players}});
  }
  start["stages"] = stages;
  start["roles"] = result.role_assignment;
  auto agent_list = nlohmann::ordered_json::array();
  for (const auto& a : plan.roles) {
    const bool model = a.kind == AgentKind::kLlm && opts.mode == RunMode::kLive;
    agent_list.push_back({{"agent_id", a.id},
                          {"family", a.family},
                          {"kind", std::string(to_string(a.kind))},
                          {"model", model ? a.endpoint->model_id : std::string()}});
  }
  start["agents"] = agent_list;
  sink.emit(start);

  auto finish = [&](TrialStatus status) {
    result.status = status;
    Event end;
    end["kind"] = "trial_end";
    end["trial_id"] = result.trial_id;
    end["condition"] = result.condition;
    end["status"] = status == TrialStatus::kCompleted ? "completed" : "aborted";
    int done = 0;
    for (const auto& l : result.stage_logs) done += l.complete() ? 1 : 0;
    end["stages_completed"] = done;
    end["lessons"] = static_cast<int>(result.lessons.size());
    end["abort"] = result.abort ? result.abort->to_json() : nlohmann::ordered_json();
    if (result.final_metrics) {
      end["final_metrics"] = {{"avg_payoff", result.final_metrics->avg_payoff},
                              {"cooperation_rate", result.final_metrics->cooperation_rate},
                              {"totals", tokens_json(result.final_metrics->totals)}};
    } else {
      end["final_metrics"] = nullptr;
    }
    sink.emit(end);
    return result;
  };

  std::unique_ptr<curriculum::LessonGenerator> generator;
  for (const auto& stage : plan.stages) {
    std::vector<Agent*> seats;
    for (int i = 0; i < stage.game.n_players; ++i) seats.push_back(agents[static_cast<std::size_t>(i)].get());

    Event ss;
    ss["kind"] = "stage_start";
    ss["trial_id"] = result.trial_id;
    ss["stage"] = stage.stage_index;
    ss["spec"] = spec_json(stage.game);
    auto seat_ids = nlohmann::ordered_json::array();
    for (auto* a : seats) seat_ids.push_back(a->id());
    ss["seats"] = seat_ids;
    ss["lesson_count"] = static_cast<int>(result.lessons.size());
    sink.emit(ss);

    GameContext ctx{result.trial_id, stage.stage_index, opts.retry_limit, &sink, opts.on_observation};
    GameLog log = run_game(stage.game, seats, curriculum::lesson_texts(result.lessons), ctx);
    result.stage_logs.push_back(log);

    Event se;
    se["kind"] = "stage_end";
    se["trial_id"] = result.trial_id;
    se["stage"] = stage.stage_index;
    se["game"] = std::string(game_name(stage.game.kind));
    se["status"] = log.complete() ? "completed" : "aborted";
    se["rounds_played"] = static_cast<int>(log.rounds.size());
    se["totals"] = tokens_json(log.totals);
    se["cooperation_rate"] = log.complete() ? nlohmann::ordered_json(analysis::cooperation_rate(log)) : nlohmann::ordered_json();
    se["avg_payoff"] = log.complete() ? nlohmann::ordered_json(analysis::average_player_payoff(log)) : nlohmann::ordered_json();
    se["abort"] = log.abort ? abort_json(*log.abort, stage.stage_index) : nlohmann::ordered_json();
    sink.emit(se);

    if (log.aborted()) {
      result.abort = TrialAbort{log.abort->cause, stage.stage_index, log.abort->round,
                                std::string(to_string(log.abort->phase)), log.abort->agent_id};
      return finish(TrialStatus::kAborted);
    }
    if (&stage == &plan.stages.back()) break;

    try {
      if (!generator) generator = opts.lesson_generator();
      auto ctx_lesson = curriculum::build_lesson_context(log, stage.stage_index, result.lessons);
      auto generated = curriculum::generate_lesson(ctx_lesson, *generator, opts.clock);
      Event le;
      le["kind"] = "lesson";
      le["trial_id"] = result.trial_id;
      const auto body = generated.lesson.to_json();
      for (const auto& [k, v] : body.items()) le[k] = v;
      le["prompt"] = generated.prompt;
      sink.emit(le);
      result.lessons = curriculum::accumulate(std::move(result.lessons), std::move(generated.lesson));
    } catch (const std::exception& e) {
      result.abort = TrialAbort{std::string("lesson generation failed: ") + e.what(), stage.stage_index,
                                stage.game.rounds, "lesson", generator ? generator->id() : "lesson-generator"};
      return finish(TrialStatus::kAborted);
    }
  }

  const GameLog& final_log = result.stage_logs.back();
  result.final_metrics = FinalMetrics{analysis::average_player_payoff(final_log),
                                      analysis::cooperation_rate(final_log), final_log.totals};
  return finish(TrialStatus::kCompleted);
}

/// Curriculum trial plan: roles are drawn from the pool with a seed-derived RNG.
inline TrialPlan plan_trial(const curriculum::CurriculumCondition& condition, const std::vector<AgentSpec>& pool,
                            int trial_index, std::uint64_t seed) {
  TrialPlan plan{trial_id_for(condition.name, trial_index), std::string(to_string(condition.name)),
                 condition.stages, {}};
  int n_roles = 0;
  for (const auto& s : condition.stages) n_roles = std::max(n_roles, s.game.n_players);
  Rng role_rng(derive_seed(seed, "roles", 0));
  for (int idx : assign_roles(pool.size(), n_roles, role_rng)) plan.roles.push_back(pool[static_cast<std::size_t>(idx)]);
  return plan;
}

inline TrialResult run_trial(const curriculum::CurriculumCondition& condition, const std::vector<AgentSpec>& pool,
                             int trial_index, std::uint64_t seed, EventSink& sink, const TrialOptions& opts = {}) {
  return run_plan(plan_trial(condition, pool, trial_index, seed), trial_index, seed, sink, opts);
}

}  // namespace dilemma::orchestrator
