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
#include <fstream>
#include <string>
#include <vector>

#include "dilemma/orchestrator/runner.hpp"

namespace dilemma::orchestrator {

struct Violation {
  std::string location;  // file[:line]
  std::string message;
  std::string str() const { return location + ": " + message; }
};

/// A trial file read back into memory. Stage logs are rebuilt by replaying the
/// logged actions through the engine, so totals are recomputed, not trusted.
struct LoadedTrial {
  std::filesystem::path path;
  TrialResult result;
  std::vector<GameSpec> stage_specs;
  bool has_end = false;
};

namespace detail {

inline std::string payoff_text(const PayoffVector& p) {
  std::vector<std::string> parts;
  for (const auto& t : p) parts.push_back(t.str());
  return "[" + text::join(parts, ", ") + "]";
}

struct StageReplay {
  GameSpec spec;
  std::optional<GameState> state;
};

}  // namespace detail

/// Reads one JSONL trial file. Problems are appended to `violations`; the
/// returned trial holds whatever could be reconstructed.
inline LoadedTrial load_trial(const std::filesystem::path& path, std::vector<Violation>& violations) {
  LoadedTrial out;
  out.path = path;
  const std::string file = path.filename().string();
  auto fail = [&](std::size_t line, const std::string& msg) {
    violations.push_back({file + ":" + std::to_string(line), msg});
  };

  std::ifstream in(path, std::ios::binary);
  if (!in) {
    violations.push_back({file, "cannot open file"});
    return out;
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!content.empty() && content.back() != '\n') {
    const auto lines = static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n')) + 1;
    fail(lines, "file does not end with a newline (truncated final line?)");
  }

  std::vector<detail::StageReplay> stages;
  std::string trial_id;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool seen_start = false;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    const std::string_view line(content.data() + start, end - start);
    start = end + 1;
    ++line_no;

    nlohmann::json e;
    try {
      e = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      fail(line_no, "JSON parse error at byte " + std::to_string(err.byte) + " of the line");
      continue;
    }
    const auto schema = schema_violations(e);
    for (const auto& v : schema) fail(line_no, v);
    if (!schema.empty()) continue;

    const std::string kind = e["kind"];
    if (!seen_start && kind != "trial_start") fail(line_no, "first event must be trial_start");
    if (kind != "trial_start" && e["trial_id"] != trial_id) fail(line_no, "trial_id does not match trial_start");
    if (out.has_end) fail(line_no, "event after trial_end");

    try {
      if (kind == "trial_start") {
        if (seen_start) fail(line_no, "second trial_start");
        seen_start = true;
        trial_id = e["trial_id"];
        out.result.trial_id = trial_id;
        out.result.condition = e["condition"];
        out.result.trial_index = e["trial_index"];
        out.result.seed = e["seed"].get<std::uint64_t>();
        out.result.role_assignment = e["roles"].get<std::vector<std::string>>();
      } else if (kind == "stage_start") {
        const int stage = e["stage"];
        if (stage != static_cast<int>(stages.size()) + 1) fail(line_no, "stage numbers out of order");
        detail::StageReplay s{spec_from_json(e["spec"]), std::nullopt};
        s.state.emplace(s.spec);
        stages.push_back(std::move(s));
        out.stage_specs.push_back(stages.back().spec);
      } else if (kind == "round") {
        if (stages.empty() || e["stage"] != static_cast<int>(stages.size())) {
          fail(line_no, "round outside its stage");
          continue;
        }
        auto& s = stages.back();
        const RoundRecord logged = round_from_json(e, s.spec);
        const std::string where = "trial " + trial_id + " stage " + std::to_string(stages.size()) + " round " +
                                  std::to_string(logged.round_index);
        if (logged.round_index != s.state->current_round()) fail(line_no, where + ": unexpected round number");
        std::optional<RoundRecord> replayed;
        for (const auto& pa : logged.phases) {
          auto step_out = step(*s.state, pa.phase, pa.actions);
          s.state = std::move(step_out.state);
          if (step_out.completed) replayed = step_out.completed;
        }
        if (!replayed) {
          fail(line_no, where + ": phases do not complete a round");
          continue;
        }
        if (replayed->stage_payoffs != logged.stage_payoffs) {
          fail(line_no, where + ": stage_payoffs " + detail::payoff_text(logged.stage_payoffs) +
                            " differ from recomputed " + detail::payoff_text(replayed->stage_payoffs));
        }
        if (replayed->payoffs != logged.payoffs) {
          fail(line_no, where + ": payoffs " + detail::payoff_text(logged.payoffs) + " differ from recomputed " +
                            detail::payoff_text(replayed->payoffs));
        }
        if (payoffs_from_json(e["totals"]) != s.state->log().totals) {
          fail(line_no, where + ": running totals differ from recomputed " +
                            detail::payoff_text(s.state->log().totals));
        }
        if (replayed->broadcast_words != logged.broadcast_words) fail(line_no, where + ": broadcast words differ");
      } else if (kind == "stage_end") {
        if (stages.empty() || e["stage"] != static_cast<int>(stages.size())) {
          fail(line_no, "stage_end without matching stage_start");
          continue;
        }
        auto& s = stages.back();
        GameLog log = s.state->log();
        if (!e["abort"].is_null()) {
          const auto& a = e["abort"];
          log.abort = AbortInfo{a.at("agent_id").get<std::string>(), a.at("round").get<int>(),
                                a.at("phase") == "lesson" ? Phase::kAct : phase_from_name(a.at("phase").get<std::string>()),
                                a.at("reason").get<std::string>()};
        }
        if (payoffs_from_json(e["totals"]) != log.totals) {
          fail(line_no, "trial " + trial_id + " stage " + std::to_string(stages.size()) +
                            ": stage totals differ from recomputed " + detail::payoff_text(log.totals));
        }
        if (e["rounds_played"] != static_cast<int>(log.rounds.size())) fail(line_no, "rounds_played mismatch");
        const bool says_complete = e["status"] == "completed";
        if (says_complete != log.complete()) fail(line_no, "stage status does not match its rounds");
        out.result.stage_logs.push_back(std::move(log));
      } else if (kind == "lesson") {
        auto lesson = curriculum::Lesson::from_json(e);
        if (e["text_hash"] != lesson.text_hash()) fail(line_no, "lesson text_hash does not match its text");
        if (text::trim(lesson.text).empty()) fail(line_no, "empty lesson text");
        out.result.lessons.push_back(std::move(lesson));
      } else if (kind == "trial_end") {
        out.has_end = true;
        const bool completed = e["status"] == "completed";
        out.result.status = completed ? TrialStatus::kCompleted : TrialStatus::kAborted;
        if (!e["abort"].is_null()) {
          const auto& a = e["abort"];
          out.result.abort = TrialAbort{a.at("reason"), a.at("stage"), a.at("round"), a.at("phase"), a.at("agent_id")};
        }
        const bool all_done = !stages.empty() && !out.result.stage_logs.empty() &&
                              std::all_of(out.result.stage_logs.begin(), out.result.stage_logs.end(),
                                          [](const GameLog& l) { return l.complete(); }) &&
                              out.result.stage_logs.size() == stages.size();
        if (completed && !all_done) fail(line_no, "trial marked completed but a stage is incomplete");
        if (completed && e["final_metrics"].is_null()) fail(line_no, "completed trial without final_metrics");
        if (completed && all_done) {
          const auto& last = out.result.stage_logs.back();
          out.result.final_metrics =
              FinalMetrics{analysis::average_player_payoff(last), analysis::cooperation_rate(last), last.totals};
        }
        if (!completed && !out.result.abort) fail(line_no, "aborted trial without abort details");
      }
    } catch (const std::exception& ex) {
      fail(line_no, std::string(kind) + ": " + ex.what());
    }
  }
  if (!seen_start) violations.push_back({file, "no trial_start event"});
  if (!out.has_end) violations.push_back({file, "missing trial_end event (incomplete trial file)"});
  return out;
}

/// Trial files of a run directory, sorted by name.
inline std::vector<std::filesystem::path> trial_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct ValidationReport {
  std::size_t files = 0;
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_run_dir(const std::filesystem::path& dir) {
  ValidationReport report;
  const auto files = trial_files(dir);
  if (files.empty()) report.violations.push_back({dir.string(), "no .jsonl trial files"});
  for (const auto& f : files) {
    ++report.files;
    load_trial(f, report.violations);
  }
  return report;
}

}  // namespace dilemma::orchestrator
