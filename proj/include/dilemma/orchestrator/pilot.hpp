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

#include <map>
#include <string>
#include <vector>

#include "dilemma/orchestrator/experiment.hpp"

namespace dilemma::orchestrator {

enum class Grouping { kHetero, kCoalition };

inline std::string_view to_string(Grouping g) { return g == Grouping::kHetero ? "hetero" : "coalition"; }

inline Grouping grouping_from_name(std::string_view s) {
  if (s == "hetero" || s == "heterogeneous") return Grouping::kHetero;
  if (s == "coalition") return Grouping::kCoalition;
  throw ConfigError("grouping must be 'hetero' or 'coalition', got '" + std::string(s) + "'");
}

struct PilotConfig {
  bool comm = false;
  Grouping grouping = Grouping::kHetero;
  int trials = 30;
  int rounds = 3;
  std::uint64_t master_seed = 0;
  std::vector<AgentSpec> pool = default_pool();
  int retry_limit = kDefaultRetryLimit;
  std::filesystem::path out_dir = "runs";
  RunMode mode = RunMode::kMock;
  int parallelism = 0;

  std::string condition() const {
    return std::string(comm ? "stag_hunt_comm_" : "stag_hunt_") + std::string(to_string(grouping));
  }

  GameSpec spec() const { return GameSpec::make(comm ? GameKind::kStagHuntComm : GameKind::kStagHunt, rounds); }

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
    validate_pool(pool);
    const auto n = families().size();
    if (grouping == Grouping::kHetero && n < 4) {
      throw ConfigError("hetero grouping needs agents from 4 model families; the pool has " + std::to_string(n));
    }
    if (grouping == Grouping::kCoalition && n < 2) {
      throw ConfigError("coalition grouping needs at least 2 model families; the pool has " + std::to_string(n));
    }
  }

  /// Families in first-appearance order, each with its agents.
  std::vector<std::pair<std::string, std::vector<const AgentSpec*>>> families() const {
    std::vector<std::pair<std::string, std::vector<const AgentSpec*>>> out;
    for (const auto& a : pool) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& f) { return f.first == a.family; });
      if (it == out.end()) {
        out.push_back({a.family, {}});
        it = std::prev(out.end());
      }
      it->second.push_back(&a);
    }
    return out;
  }
};

/// hetero: one agent from each of 4 distinct families. coalition: two
/// families, two seats each; a family with a single agent contributes two
/// instances of it, suffixed #1 and #2. Seat order is shuffled.
inline TrialPlan plan_pilot_trial(const PilotConfig& cfg, int trial_index, std::uint64_t seed) {
  cfg.validate();
  const auto fams = cfg.families();
  Rng rng(derive_seed(seed, "roles", 0));
  TrialPlan plan;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", trial_index + 1);
  plan.trial_id = cfg.condition() + "-" + buf;
  plan.condition = cfg.condition();
  plan.stages.push_back({1, cfg.spec()});

  auto pick = [&](const std::vector<const AgentSpec*>& members, int k) {
    std::vector<AgentSpec> out;
    if (static_cast<int>(members.size()) >= k) {
      for (int i : assign_roles(members.size(), k, rng)) out.push_back(*members[static_cast<std::size_t>(i)]);
      return out;
    }
    const AgentSpec& only = *members[static_cast<std::size_t>(rng.below(members.size()))];
    for (int i = 1; i <= k; ++i) {
      AgentSpec copy = only;
      copy.id = only.id + "#" + std::to_string(i);
      out.push_back(std::move(copy));
    }
    return out;
  };

  const int n_fams = cfg.grouping == Grouping::kHetero ? 4 : 2;
  const int per_fam = cfg.grouping == Grouping::kHetero ? 1 : 2;
  for (int f : assign_roles(fams.size(), n_fams, rng)) {
    for (auto& a : pick(fams[static_cast<std::size_t>(f)].second, per_fam)) plan.roles.push_back(std::move(a));
  }
  shuffle(std::span<AgentSpec>(plan.roles), rng);
  return plan;
}

inline BatchSummary run_pilot(const PilotConfig& cfg, const ExperimentHooks& hooks = {}) {
  cfg.validate();
  std::vector<TrialJob> jobs;
  const std::string cond = cfg.condition();
  for (int i = 0; i < cfg.trials; ++i) {
    const auto seed = derive_seed(cfg.master_seed, cond, static_cast<std::uint64_t>(i));
    jobs.push_back({cond, i, seed, [&cfg, i, seed] { return plan_pilot_trial(cfg, i, seed); }});
  }
  LessonGeneratorConfig no_lessons;
  no_lessons.stub = true;
  return run_jobs(jobs, {cond}, cfg.out_dir, cfg.parallelism, cfg.master_seed,
                  trial_options(cfg.mode, cfg.retry_limit, no_lessons, hooks));
}

/// Fails with a GatewayError(kAuthConfig) naming the first missing key variable.
inline void check_live_credentials(const PilotConfig& cfg, const llm::EnvLookup& env = llm::getenv_lookup) {
  if (cfg.mode != RunMode::kLive) return;
  for (const auto& a : cfg.pool) {
    if (a.kind == AgentKind::kLlm && !env(a.endpoint->api_key_env)) {
      throw llm::GatewayError(llm::GatewayErrc::kAuthConfig, "environment variable " + a.endpoint->api_key_env +
                                                                 " is not set (needed for " + a.endpoint->model_id +
                                                                 ")");
    }
  }
}

}  // namespace dilemma::orchestrator
