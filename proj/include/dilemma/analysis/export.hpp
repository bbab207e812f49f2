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
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dilemma/analysis/metrics.hpp"

namespace dilemma::analysis {

inline constexpr std::string_view kConditionStatsHeader = "condition,n,mean,std,ci95,pct_vs_control";
inline constexpr std::string_view kTrajectoryHeader = "condition,round,mean,std,ci95,n";
inline constexpr std::string_view kTrialTrajectoryHeader = "condition,trial_id,round,value";
inline constexpr std::string_view kWordFrequencyHeader = "word,count";

namespace detail {

inline std::string opt_fixed(const std::optional<double>& v, int decimals) {
  return v ? text::fixed(*v, decimals) : std::string();
}

inline void check_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos) {
    throw AnalysisError("CSV field contains a delimiter: '" + s + "'");
  }
}

}  // namespace detail

/// Fills pct_vs_control for every row except the control itself.
inline void attach_pct_vs_control(std::vector<ConditionStats>& rows, std::string_view control) {
  const auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const ConditionStats& s) { return s.condition == control; });
  for (auto& s : rows) s.pct_vs_control.reset();
  if (it == rows.end() || it->mean_payoff == 0.0) return;
  const double control_mean = it->mean_payoff;
  for (auto& s : rows) {
    if (s.condition != control) s.pct_vs_control = pct_vs_control(s.mean_payoff, control_mean);
  }
}

// Payoffs and rates at 1 decimal, CI half-widths at 2.
inline std::string condition_stats_csv(const std::vector<ConditionStats>& rows) {
  std::ostringstream out;
  out << kConditionStatsHeader << '\n';
  for (const auto& s : rows) {
    detail::check_field(s.condition);
    out << s.condition << ',' << s.n_completed << ',' << text::fixed(s.mean_payoff, 1) << ','
        << detail::opt_fixed(s.std_payoff, 1) << ',' << detail::opt_fixed(s.ci95, 2) << ','
        << detail::opt_fixed(s.pct_vs_control, 1) << '\n';
  }
  return out.str();
}

// Binary games are reported as cooperation percentages, the PGG family as tokens.
inline std::string trajectory_csv(const std::vector<TrajectorySeries>& series) {
  std::ostringstream out;
  out << kTrajectoryHeader << '\n';
  for (const auto& s : series) {
    detail::check_field(s.condition);
    const double scale = is_pgg_family(s.kind) ? 1.0 : 100.0;
    auto scaled = [&](const std::optional<double>& v) -> std::optional<double> {
      if (!v) return std::nullopt;
      return *v * scale;
    };
    for (const auto& p : s.points) {
      out << s.condition << ',' << p.round << ',' << text::fixed(p.mean * scale, 1) << ','
          << detail::opt_fixed(scaled(p.std), 1) << ',' << detail::opt_fixed(scaled(p.ci95), 2) << ','
          << p.n << '\n';
    }
  }
  return out.str();
}

struct TrialSeries {
  std::string condition;
  std::string trial_id;
  GameKind kind = GameKind::kIPGGPunish;
  std::vector<double> values;  // round_level per round
};

inline std::string trial_trajectories_csv(const std::vector<TrialSeries>& trials) {
  std::ostringstream out;
  out << kTrialTrajectoryHeader << '\n';
  for (const auto& t : trials) {
    detail::check_field(t.condition);
    detail::check_field(t.trial_id);
    const double scale = is_pgg_family(t.kind) ? 1.0 : 100.0;
    for (std::size_t r = 0; r < t.values.size(); ++r) {
      out << t.condition << ',' << t.trial_id << ',' << r + 1 << ',' << text::fixed(t.values[r] * scale, 1)
          << '\n';
    }
  }
  return out.str();
}

/// Sorted by descending count, then word.
inline std::string word_frequency_csv(const std::map<std::string, int>& counts) {
  std::vector<std::pair<std::string, int>> rows(counts.begin(), counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::ostringstream out;
  out << kWordFrequencyHeader << '\n';
  for (const auto& [w, c] : rows) {
    detail::check_field(w);
    out << w << ',' << c << '\n';
  }
  return out.str();
}

/// Splits unquoted CSV text into rows of fields (header included).
inline std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : text::split(csv, '\n')) {
    if (line.empty()) continue;
    rows.push_back(text::split(line, ','));
  }
  return rows;
}

}  // namespace dilemma::analysis
