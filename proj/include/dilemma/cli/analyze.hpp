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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dilemma/analysis/export.hpp"
#include "dilemma/orchestrator/replay.hpp"

namespace dilemma::cli {

namespace fs = std::filesystem;
using orchestrator::LoadedTrial;

/// Trials of a run directory grouped by condition. Curriculum conditions come
/// first in their canonical order, anything else (pilot labels) sorted after.
struct RunData {
  std::vector<std::string> order;
  std::map<std::string, std::vector<LoadedTrial>> by_condition;
  std::vector<orchestrator::Violation> violations;
  std::size_t files = 0;

  static bool usable(const LoadedTrial& t) {
    return t.has_end && t.result.completed() && !t.result.stage_logs.empty() &&
           t.result.stage_logs.back().complete();
  }

  int completed() const {
    int n = 0;
    for (const auto& [c, trials] : by_condition) {
      n += static_cast<int>(std::count_if(trials.begin(), trials.end(), usable));
    }
    return n;
  }
};

inline RunData load_run(const fs::path& dir) {
  RunData data;
  for (const auto& f : orchestrator::trial_files(dir)) {
    ++data.files;
    auto t = orchestrator::load_trial(f, data.violations);
    if (t.result.condition.empty()) continue;
    data.by_condition[t.result.condition].push_back(std::move(t));
  }
  for (auto c : curriculum::kAllConditions) {
    if (data.by_condition.count(std::string(to_string(c)))) data.order.emplace_back(to_string(c));
  }
  for (const auto& [c, trials] : data.by_condition) {
    if (std::find(data.order.begin(), data.order.end(), c) == data.order.end()) data.order.push_back(c);
  }
  for (auto& [c, trials] : data.by_condition) {
    std::sort(trials.begin(), trials.end(),
              [](const LoadedTrial& a, const LoadedTrial& b) { return a.result.trial_index < b.result.trial_index; });
  }
  return data;
}

struct AnalysisOutput {
  std::vector<std::pair<std::string, std::string>> files;  // name -> content, in write order
  std::vector<analysis::ConditionStats> stats;
};

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

/// Everything `analyze` writes, computed from the final stage of each
/// completed trial. Throws AnalysisError when nothing completed.
inline AnalysisOutput analyze_run(const RunData& data) {
  if (data.completed() == 0) {
    throw analysis::AnalysisError("zero completed trials in " + std::to_string(data.files) + " trial files");
  }
  AnalysisOutput out;
  std::vector<analysis::TrajectorySeries> series;
  std::vector<analysis::TrialSeries> per_trial;
  std::vector<GameLog> comm_logs;
  auto summary_rows = nlohmann::ordered_json::array();

  for (const auto& cond : data.order) {
    const auto& trials = data.by_condition.at(cond);
    std::vector<GameLog> finals;
    std::vector<double> payoffs;
    std::vector<double> coop;
    std::vector<std::string> aborted_ids;
    for (const auto& t : trials) {
      if (!RunData::usable(t)) {
        aborted_ids.push_back(t.result.trial_id);
        continue;
      }
      const GameLog& last = t.result.stage_logs.back();
      finals.push_back(last);
      payoffs.push_back(analysis::average_player_payoff(last));
      coop.push_back(analysis::cooperation_rate(last));
      std::vector<double> levels;
      for (const auto& r : last.rounds) levels.push_back(analysis::round_level(last.spec, r));
      per_trial.push_back({cond, t.result.trial_id, last.spec.kind, std::move(levels)});
      if (last.spec.kind == GameKind::kStagHuntComm) comm_logs.push_back(last);
    }

    nlohmann::ordered_json row{{"condition", cond},
                               {"trials", static_cast<int>(trials.size())},
                               {"n_completed", static_cast<int>(finals.size())},
                               {"n_aborted", static_cast<int>(aborted_ids.size())},
                               {"aborted_trials", aborted_ids}};
    if (finals.empty()) {
      summary_rows.push_back(row);
      continue;
    }
    auto stats = analysis::payoff_stats(cond, payoffs);
    stats.n_aborted = static_cast<int>(aborted_ids.size());
    stats.cooperation_rate = analysis::mean(coop);
    out.stats.push_back(stats);
    series.push_back(analysis::contribution_trajectory(cond, finals));

    row["final_game"] = std::string(game_name(finals.front().spec.kind));
    row["mean_payoff"] = stats.mean_payoff;
    row["std_payoff"] = opt_json(stats.std_payoff);
    row["ci95_payoff"] = opt_json(stats.ci95);
    row["cooperation_rate"] = stats.cooperation_rate;
    row["trajectory_first_last_delta"] = series.back().first_last_delta();
    if (finals.front().spec.kind == GameKind::kStagHuntComm) {
      row["word_action_consistency"] = opt_json(analysis::word_action_consistency(finals));
    }
    summary_rows.push_back(row);
  }

  const std::string control(to_string(curriculum::ConditionName::kControl));
  analysis::attach_pct_vs_control(out.stats, control);
  for (auto& row : summary_rows) {
    for (const auto& s : out.stats) {
      if (s.condition == row["condition"]) row["pct_vs_control"] = opt_json(s.pct_vs_control);
    }
  }

  out.files.emplace_back("condition_stats.csv", analysis::condition_stats_csv(out.stats));
  out.files.emplace_back("trajectory.csv", analysis::trajectory_csv(series));
  out.files.emplace_back("trial_trajectories.csv", analysis::trial_trajectories_csv(per_trial));
  std::vector<std::string> names{"condition_stats.csv", "trajectory.csv", "trial_trajectories.csv"};
  if (!comm_logs.empty()) {
    out.files.emplace_back("word_frequency.csv", analysis::word_frequency_csv(analysis::word_frequency(comm_logs)));
    names.emplace_back("word_frequency.csv");
  }
  nlohmann::ordered_json summary{{"trial_files", static_cast<int>(data.files)},
                                 {"completed", data.completed()},
                                 {"validation_problems", static_cast<int>(data.violations.size())},
                                 {"conditions", summary_rows},
                                 {"outputs", names}};
  out.files.emplace_back("analysis_summary.json", summary.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------- flat export

inline constexpr std::string_view kTrialsHeader =
    "condition,trial_id,status,stages_completed,lessons,final_game,avg_payoff,cooperation_rate,"
    "abort_stage,abort_round,abort_agent,abort_reason";
inline constexpr std::string_view kActionsHeader =
    "condition,trial_id,stage,game,round,phase,player,agent_id,action,stage_payoff,payoff";

/// Commas and line breaks become spaces so free text stays one field.
inline std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  }
  return s;
}

inline std::string trials_csv(const RunData& data) {
  std::string out = std::string(kTrialsHeader) + "\n";
  for (const auto& cond : data.order) {
    for (const auto& t : data.by_condition.at(cond)) {
      const auto& r = t.result;
      int done = 0;
      for (const auto& l : r.stage_logs) done += l.complete() ? 1 : 0;
      const bool ok = RunData::usable(t);
      std::vector<std::string> f{cond,
                                 r.trial_id,
                                 !t.has_end ? "incomplete" : (ok ? "completed" : "aborted"),
                                 std::to_string(done),
                                 std::to_string(r.lessons.size()),
                                 t.stage_specs.empty() ? "" : std::string(game_name(t.stage_specs.back().kind)),
                                 ok ? text::fixed(analysis::average_player_payoff(r.stage_logs.back()), 4) : "",
                                 ok ? text::fixed(analysis::cooperation_rate(r.stage_logs.back()), 6) : "",
                                 r.abort ? std::to_string(r.abort->stage) : "",
                                 r.abort ? std::to_string(r.abort->round) : "",
                                 r.abort ? csv_safe(r.abort->agent_id) : "",
                                 r.abort ? csv_safe(r.abort->reason) : ""};
      out += text::join(f, ",") + "\n";
    }
  }
  return out;
}

inline std::string actions_csv(const RunData& data) {
  std::string out = std::string(kActionsHeader) + "\n";
  for (const auto& cond : data.order) {
    for (const auto& t : data.by_condition.at(cond)) {
      const auto& r = t.result;
      for (std::size_t s = 0; s < r.stage_logs.size(); ++s) {
        const GameLog& log = r.stage_logs[s];
        const std::string game(game_name(log.spec.kind));
        for (const auto& round : log.rounds) {
          for (const auto& pa : round.phases) {
            for (std::size_t p = 0; p < pa.actions.size(); ++p) {
              const std::string agent = p < r.role_assignment.size() ? r.role_assignment[p] : "";
              std::vector<std::string> f{cond,
                                         r.trial_id,
                                         std::to_string(s + 1),
                                         game,
                                         std::to_string(round.round_index),
                                         std::string(to_string(pa.phase)),
                                         std::to_string(p + 1),
                                         csv_safe(agent),
                                         csv_safe(describe(pa.actions[p])),
                                         round.stage_payoffs[p].str(),
                                         round.payoffs[p].str()};
              out += text::join(f, ",") + "\n";
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace dilemma::cli
