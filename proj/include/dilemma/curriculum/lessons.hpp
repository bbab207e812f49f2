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

#include <chrono>
#include <ctime>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dilemma/agent/templates.hpp"
#include "dilemma/analysis/metrics.hpp"
#include "dilemma/curriculum/condition.hpp"
#include "dilemma/llm/client.hpp"

namespace dilemma::curriculum {

inline constexpr std::string_view kNoPreviousLessons = "None (this is the first stage).";

struct Lesson {
  int stage_index = 0;  // stage the lesson was drawn from
  std::string game_name;
  std::string text;
  std::string generator_id;
  std::string generated_at;

  std::string text_hash() const { return text::hex64(fnv1a64(text)); }

  nlohmann::ordered_json to_json() const {
    return {{"stage", stage_index},       {"game", game_name},
            {"text", text},               {"text_hash", text_hash()},
            {"generator", generator_id}, {"generated_at", generated_at}};
  }
  static Lesson from_json(const nlohmann::json& j) {
    return {j.at("stage").get<int>(), j.at("game").get<std::string>(), j.at("text").get<std::string>(),
            j.at("generator").get<std::string>(), j.at("generated_at").get<std::string>()};
  }
  friend bool operator==(const Lesson&, const Lesson&) = default;
};

/// Append-only; returns the extended list.
inline std::vector<Lesson> accumulate(std::vector<Lesson> lessons, Lesson next) {
  lessons.push_back(std::move(next));
  return lessons;
}

inline std::vector<std::string> lesson_texts(const std::vector<Lesson>& lessons) {
  std::vector<std::string> out;
  for (const auto& l : lessons) out.push_back(l.text);
  return out;
}

struct LessonPromptContext {
  std::string game_name;
  int stage_num = 1;
  int rounds_played = 0;
  int num_players = 0;
  double cooperation_rate = 0;  // percent
  double avg_payoff = 0;
  std::vector<double> cooperation_trajectory;  // percent per round
  std::string patterns;
  std::vector<std::string> previous_lessons;

  std::string trajectory_string() const {
    std::vector<std::string> parts;
    for (double v : cooperation_trajectory) parts.push_back(text::fixed(v, 1) + "%");
    return "[" + text::join(parts, ", ") + "]";
  }

  std::string previous_lessons_string() const {
    if (previous_lessons.empty()) return std::string(kNoPreviousLessons);
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < previous_lessons.size(); ++i) {
      lines.push_back(std::to_string(i + 1) + ". " + previous_lessons[i]);
    }
    return text::join(lines, "\n");
  }

  std::map<std::string, std::string> placeholder_values() const {
    return {{"game_name", game_name},
            {"stage_num", std::to_string(stage_num)},
            {"rounds_played", std::to_string(rounds_played)},
            {"num_players", std::to_string(num_players)},
            {"cooperation_rate:.1f", text::fixed(cooperation_rate, 1)},
            {"avg_payoff:.1f", text::fixed(avg_payoff, 1)},
            {"cooperation_trajectory", trajectory_string()},
            {"patterns", patterns},
            {"previous_lessons_string", previous_lessons_string()}};
  }

  std::string render() const { return PromptTemplate::builtin("lesson_generation").fill(placeholder_values()); }
};

namespace detail {

inline std::string player_pattern(const GameLog& log, std::size_t seat) {
  const GameSpec& spec = log.spec;
  std::string line = "- Player " + std::to_string(seat + 1) + ": ";
  if (is_pgg_family(spec.kind)) {
    int sum = 0;
    int first_zero = 0;
    int spent = 0;
    int received = 0;
    for (const auto& r : log.rounds) {
      const int c = std::get<Contribution>(r.find_phase(Phase::kContribute)->actions[seat]).amount;
      sum += c;
      if (c == 0 && first_zero == 0) first_zero = r.round_index;
      if (const PhaseActions* p = r.find_phase(Phase::kPunish)) {
        for (std::size_t i = 0; i < p->actions.size(); ++i) {
          const auto& alloc = std::get<PunishmentAllocation>(p->actions[i]);
          if (i == seat) spent += alloc.total();
          if (auto it = alloc.spends.find(static_cast<int>(seat)); it != alloc.spends.end()) received += it->second;
        }
      }
    }
    line += "mean contribution " + text::fixed(static_cast<double>(sum) / spec.rounds, 1) + " of " +
            std::to_string(spec.endowment);
    line += first_zero ? "; first zero contribution in round " + std::to_string(first_zero)
                       : "; never contributed zero";
    if (spec.kind == GameKind::kIPGGPunish) {
      line += "; spent " + std::to_string(spent) + " punishment tokens, received " +
              std::to_string(received) + " (" + std::to_string(received * spec.punish_ratio) + " lost)";
    }
  } else {
    int coop = 0;
    int first_defect = 0;
    for (const auto& r : log.rounds) {
      const bool c = is_cooperative(std::get<Choice>(r.find_phase(Phase::kAct)->actions[seat]));
      coop += c ? 1 : 0;
      if (!c && first_defect == 0) first_defect = r.round_index;
    }
    line += "cooperated in " + std::to_string(coop) + "/" + std::to_string(spec.rounds) + " rounds";
    line += first_defect ? "; first defection in round " + std::to_string(first_defect) : "; never defected";
  }
  line += "; total payoff " + log.totals[seat].str();
  return line;
}

}  // namespace detail

/// Deterministic per-player summary used for the "patterns" placeholder.
inline std::string describe_patterns(const GameLog& log) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < log.totals.size(); ++i) lines.push_back(detail::player_pattern(log, i));
  return text::join(lines, "\n");
}

inline LessonPromptContext build_lesson_context(const GameLog& log, int stage_num,
                                                const std::vector<Lesson>& previous) {
  if (log.aborted()) throw CurriculumError("cannot build a lesson context from an aborted game");
  if (!log.complete()) throw CurriculumError("cannot build a lesson context from an unfinished game");
  LessonPromptContext ctx;
  ctx.game_name = std::string(game_name(log.spec.kind));
  ctx.stage_num = stage_num;
  ctx.rounds_played = static_cast<int>(log.rounds.size());
  ctx.num_players = log.spec.n_players;
  ctx.cooperation_rate = 100.0 * analysis::cooperation_rate(log);
  ctx.avg_payoff = analysis::average_player_payoff(log);
  for (double v : analysis::cooperation_trajectory(log)) ctx.cooperation_trajectory.push_back(100.0 * v);
  ctx.patterns = describe_patterns(log);
  ctx.previous_lessons = lesson_texts(previous);
  return ctx;
}

class LessonGenerator {
 public:
  virtual ~LessonGenerator() = default;
  virtual std::string id() const = 0;
  /// Returns the lesson text for a rendered lesson prompt.
  virtual std::string generate(const LessonPromptContext& ctx, const std::string& prompt) = 0;
};

class StubLessonGenerator final : public LessonGenerator {
 public:
  std::string id() const override { return "stub"; }
  std::string generate(const LessonPromptContext& ctx, const std::string&) override {
    return "Lesson from " + ctx.game_name + ": cooperation rate was " + text::fixed(ctx.cooperation_rate, 1) +
           "%, payoffs averaged " + text::fixed(ctx.avg_payoff, 1) + " per player over " +
           std::to_string(ctx.rounds_played) + " rounds.";
  }
};

class ModelLessonGenerator final : public LessonGenerator {
 public:
  explicit ModelLessonGenerator(llm::ChatClient client) : client_(std::move(client)) {}
  std::string id() const override { return client_.endpoint().model_id; }
  std::string generate(const LessonPromptContext&, const std::string& prompt) override {
    return client_.complete("", prompt);
  }

 private:
  llm::ChatClient client_;
};

using Clock = std::function<std::string()>;

inline std::string utc_now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Clock fixed_clock(std::string stamp = "1970-01-01T00:00:00Z") {
  return [stamp = std::move(stamp)] { return stamp; };
}

struct GeneratedLesson {
  Lesson lesson;
  std::string prompt;
};

/// The reply is stored verbatim; an empty or blank reply is an error.
inline GeneratedLesson generate_lesson(const LessonPromptContext& ctx, LessonGenerator& generator,
                                       const Clock& clock = utc_now_iso) {
  std::string prompt = ctx.render();
  std::string reply = generator.generate(ctx, prompt);
  if (text::trim(reply).empty()) {
    throw CurriculumError("lesson generator '" + generator.id() + "' returned an empty lesson");
  }
  return {Lesson{ctx.stage_num, ctx.game_name, std::move(reply), generator.id(), clock()}, std::move(prompt)};
}

}  // namespace dilemma::curriculum
