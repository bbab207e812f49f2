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
#include <atomic>
#include <functional>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dilemma/orchestrator/runner.hpp"

namespace dilemma::orchestrator {

inline constexpr std::string_view kLessonModel = "claude-opus-4-1-20250805";

struct LessonGeneratorConfig {
  bool stub = false;  // live runs use the model unless this is set
  llm::ModelEndpoint endpoint = llm::ModelEndpoint::anthropic(std::string(kLessonModel));
};

struct ExperimentConfig {
  std::vector<curriculum::ConditionName> conditions{curriculum::kAllConditions.begin(),
                                                    curriculum::kAllConditions.end()};
  int trials = 30;
  std::uint64_t master_seed = 0;
  bool seed_given = false;
  std::vector<AgentSpec> pool = default_pool();
  int retry_limit = kDefaultRetryLimit;
  std::filesystem::path out_dir = "runs";
  RunMode mode = RunMode::kMock;
  int parallelism = 0;  // 0: hardware concurrency
  curriculum::ConditionOptions condition_options;
  LessonGeneratorConfig lesson_generator;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
    if (conditions.empty()) throw ConfigError("no conditions selected");
    if (condition_options.pgg_rounds < 1) throw ConfigError("pgg_rounds must be >= 1");
    validate_pool(pool);
    for (auto c : conditions) {
      if (c == curriculum::ConditionName::kScrambled && !seed_given) {
        throw ConfigError("condition 'scrambled' requires an explicit seed (--seed)");
      }
    }
    if (pool.size() < 4) {
      throw ConfigError("agent pool has " + std::to_string(pool.size()) + " agents; at least 4 are required");
    }
  }

  /// Endpoints that will be called for real (players and lesson generator).
  std::vector<llm::ModelEndpoint> live_endpoints() const {
    std::vector<llm::ModelEndpoint> out;
    if (mode != RunMode::kLive) return out;
    for (const auto& a : pool) {
      if (a.kind == AgentKind::kLlm) out.push_back(*a.endpoint);
    }
    const bool lessons_needed = std::any_of(conditions.begin(), conditions.end(), [](auto c) {
      return c != curriculum::ConditionName::kControl;
    });
    if (lessons_needed && !lesson_generator.stub) out.push_back(lesson_generator.endpoint);
    return out;
  }
};

/// Applies a JSON config document on top of `base`. Unknown keys are rejected.
inline ExperimentConfig apply_config_json(ExperimentConfig base, const nlohmann::json& j) {
  static const std::set<std::string> known = {"agents",      "lesson_generator", "retry_limit", "trials",
                                              "parallelism", "pgg_rounds",       "npd_rule",    "conditions",
                                              "seed"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  try {
    if (j.contains("agents")) {
      base.pool.clear();
      for (const auto& a : j.at("agents")) base.pool.push_back(AgentSpec::from_json(a));
    }
    if (j.contains("lesson_generator")) {
      const auto& lg = j.at("lesson_generator");
      const std::string kind = lg.value("kind", "llm");
      if (kind == "stub") {
        base.lesson_generator.stub = true;
      } else if (kind == "llm") {
        base.lesson_generator.stub = false;
        if (lg.contains("endpoint")) base.lesson_generator.endpoint = llm::ModelEndpoint::from_json(lg["endpoint"]);
      } else {
        throw ConfigError("lesson_generator.kind must be 'stub' or 'llm'");
      }
    }
    base.retry_limit = j.value("retry_limit", base.retry_limit);
    base.trials = j.value("trials", base.trials);
    base.parallelism = j.value("parallelism", base.parallelism);
    base.condition_options.pgg_rounds = j.value("pgg_rounds", base.condition_options.pgg_rounds);
    if (j.contains("npd_rule")) base.condition_options.npd_rule = npd_rule_from_name(j["npd_rule"].get<std::string>());
    if (j.contains("conditions")) {
      base.conditions.clear();
      for (const auto& c : j["conditions"]) base.conditions.push_back(curriculum::condition_from_name(c.get<std::string>()));
    }
    if (j.contains("seed")) {
      base.master_seed = j["seed"].get<std::uint64_t>();
      base.seed_given = true;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const GameError& e) {
    throw ConfigError(e.what());
  } catch (const curriculum::CurriculumError& e) {
    throw ConfigError(e.what());
  } catch (const llm::GatewayError& e) {
    throw ConfigError(e.what());
  }
  return base;
}

inline ExperimentConfig load_config_file(ExperimentConfig base, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return apply_config_json(std::move(base), j);
}

/// Fails with a GatewayError(kAuthConfig) naming the first missing key variable.
inline void check_live_credentials(const ExperimentConfig& cfg, const llm::EnvLookup& env = llm::getenv_lookup) {
  for (const auto& e : cfg.live_endpoints()) {
    if (!env(e.api_key_env)) {
      throw llm::GatewayError(llm::GatewayErrc::kAuthConfig, "environment variable " + e.api_key_env +
                                                                 " is not set (needed for " + e.model_id + ")");
    }
  }
}

struct ConditionSummary {
  std::string condition;
  int trials = 0;
  int completed = 0;
  int aborted = 0;
  std::vector<std::string> trial_files;
  std::vector<std::pair<std::string, TrialAbort>> aborts;
};

struct BatchSummary {
  std::uint64_t master_seed = 0;
  RunMode mode = RunMode::kMock;
  std::vector<ConditionSummary> conditions;
  std::vector<TrialResult> trials;  // job order: condition-major, then trial index

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["master_seed"] = master_seed;
    j["mode"] = mode == RunMode::kMock ? "mock" : "live";
    auto conds = nlohmann::ordered_json::array();
    for (const auto& c : conditions) {
      auto aborts = nlohmann::ordered_json::array();
      for (const auto& [id, a] : c.aborts) {
        auto x = a.to_json();
        x["trial_id"] = id;
        aborts.push_back(x);
      }
      conds.push_back({{"condition", c.condition},
                       {"trials", c.trials},
                       {"completed", c.completed},
                       {"aborted", c.aborted},
                       {"trial_files", c.trial_files},
                       {"aborted_trials", aborts}});
    }
    j["conditions"] = conds;
    return j;
  }
};

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

struct ExperimentHooks {
  llm::ChatClient::Options client_options;  // live transport etc.
  ObservationHook on_observation;
};

struct TrialJob {
  std::string condition;
  int index = 0;
  std::uint64_t seed = 0;
  std::function<TrialPlan()> plan;
};

/// Runs jobs with bounded parallelism, one JSONL file per trial, then writes
/// summary.json. Trial failures are recorded, never thrown; I/O problems are.
inline BatchSummary run_jobs(const std::vector<TrialJob>& jobs, const std::vector<std::string>& condition_order,
                             const std::filesystem::path& out_dir, int parallelism, std::uint64_t master_seed,
                             const TrialOptions& topts) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  std::vector<std::optional<TrialResult>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        const TrialPlan plan = jobs[j].plan();
        JsonlFileSink sink(out_dir / (plan.trial_id + ".jsonl"));
        results[j] = run_plan(plan, jobs[j].index, jobs[j].seed, sink, topts);
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
  };
  std::size_t threads = parallelism > 0 ? static_cast<std::size_t>(parallelism)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  std::vector<std::thread> workers;
  for (std::size_t t = 1; t < threads; ++t) workers.emplace_back(worker);
  worker();
  for (auto& t : workers) t.join();

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!errors[j].empty()) {
      throw IoError(jobs[j].condition + " trial " + std::to_string(jobs[j].index + 1) + ": " + errors[j]);
    }
  }

  BatchSummary summary;
  summary.master_seed = master_seed;
  summary.mode = topts.mode;
  for (const auto& c : condition_order) {
    ConditionSummary cs;
    cs.condition = c;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].condition != c) continue;
      const TrialResult& r = *results[j];
      ++cs.trials;
      cs.trial_files.push_back(r.trial_id + ".jsonl");
      if (r.completed()) {
        ++cs.completed;
      } else {
        ++cs.aborted;
        cs.aborts.emplace_back(r.trial_id, *r.abort);
      }
    }
    summary.conditions.push_back(std::move(cs));
  }
  for (auto& r : results) summary.trials.push_back(std::move(*r));
  write_text_file(out_dir / "summary.json", summary.to_json().dump(2) + "\n");
  return summary;
}

inline TrialOptions trial_options(RunMode mode, int retry_limit, const LessonGeneratorConfig& lessons,
                                  const ExperimentHooks& hooks) {
  TrialOptions topts;
  topts.mode = mode;
  topts.retry_limit = retry_limit;
  topts.client_options = hooks.client_options;
  topts.on_observation = hooks.on_observation;
  if (mode == RunMode::kLive) {
    topts.clock = curriculum::utc_now_iso;
    if (!lessons.stub) {
      const auto endpoint = lessons.endpoint;
      const auto client_options = hooks.client_options;
      topts.lesson_generator = [endpoint, client_options] {
        return std::make_unique<curriculum::ModelLessonGenerator>(llm::ChatClient(endpoint, client_options));
      };
    }
  }
  return topts;
}

/// Every (condition, trial) pair of the config. Per-trial seed =
/// derive_seed(master seed, condition id, trial index); Scrambled also uses it
/// as the shuffle seed, so each trial gets its own precursor order.
inline BatchSummary run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks = {}) {
  cfg.validate();
  std::vector<TrialJob> jobs;
  std::vector<std::string> order;
  for (auto c : cfg.conditions) {
    order.emplace_back(to_string(c));
    for (int i = 0; i < cfg.trials; ++i) {
      const auto seed = trial_seed(cfg.master_seed, c, i);
      jobs.push_back({std::string(to_string(c)), i, seed, [&cfg, c, i, seed] {
                        const auto condition = curriculum::build_condition(c, seed, cfg.condition_options);
                        return plan_trial(condition, cfg.pool, i, seed);
                      }});
    }
  }
  return run_jobs(jobs, order, cfg.out_dir, cfg.parallelism, cfg.master_seed,
                  trial_options(cfg.mode, cfg.retry_limit, cfg.lesson_generator, hooks));
}

}  // namespace dilemma::orchestrator
