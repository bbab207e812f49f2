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

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dilemma/cli/analyze.hpp"
#include "dilemma/orchestrator/pilot.hpp"

namespace dilemma::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,  // validate found problems
  kExitConfig = 2,   // bad flags, config, or nothing to analyze
  kExitIo = 3,
  kExitAuth = 4,
};

/// Process-level dependencies, swappable in tests.
struct CliEnv {
  llm::EnvLookup env = llm::getenv_lookup;
  llm::ChatClient::Options client_options;
  orchestrator::ObservationHook on_observation;
};

namespace detail {

inline void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw orchestrator::IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : files) orchestrator::write_text_file(dir / name, content);
}

inline void print_summary(const orchestrator::BatchSummary& s, const fs::path& out_dir, std::ostream& out) {
  for (const auto& c : s.conditions) {
    out << c.condition << ": " << c.trials << " trials, " << c.completed << " completed, " << c.aborted
        << " aborted\n";
    for (const auto& [id, a] : c.aborts) {
      out << "  " << id << " aborted at stage " << a.stage << " round " << a.round << " (" << a.agent_id
          << "): " << a.reason << "\n";
    }
  }
  out << "wrote " << (out_dir / "summary.json").string() << "\n";
}

struct RunFlags {
  std::vector<std::string> conditions;
  int trials = -1;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "runs";
  bool mock = false;
  bool live = false;
  int jobs = -1;
  int retry_limit = -1;
};

struct PilotFlags {
  bool comm = false;
  bool no_comm = false;
  std::string grouping = "hetero";
  int trials = 30;
  int rounds = 3;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "runs";
  bool mock = false;
  bool live = false;
  int jobs = -1;
  int retry_limit = -1;
};

struct DirFlags {
  std::string in;
  std::string out;
};

inline orchestrator::ExperimentHooks hooks_for(const CliEnv& cli) {
  orchestrator::ExperimentHooks hooks;
  hooks.client_options = cli.client_options;
  hooks.client_options.env = cli.env;
  hooks.on_observation = cli.on_observation;
  return hooks;
}

inline int cmd_run(const RunFlags& f, const CliEnv& cli, std::ostream& out) {
  orchestrator::ExperimentConfig cfg;
  if (!f.config.empty()) cfg = orchestrator::load_config_file(std::move(cfg), f.config);
  if (!f.conditions.empty()) {
    cfg.conditions.clear();
    for (const auto& c : f.conditions) {
      if (c == "all") {
        cfg.conditions.assign(curriculum::kAllConditions.begin(), curriculum::kAllConditions.end());
      } else {
        cfg.conditions.push_back(curriculum::condition_from_name(c));
      }
    }
  }
  if (f.trials >= 0) cfg.trials = f.trials;
  if (f.seed) {
    cfg.master_seed = *f.seed;
    cfg.seed_given = true;
  }
  if (f.jobs >= 0) cfg.parallelism = f.jobs;
  if (f.retry_limit >= 0) cfg.retry_limit = f.retry_limit;
  cfg.out_dir = f.out;
  cfg.mode = f.live ? orchestrator::RunMode::kLive : orchestrator::RunMode::kMock;
  cfg.validate();
  orchestrator::check_live_credentials(cfg, cli.env);
  const auto summary = orchestrator::run_experiment(cfg, hooks_for(cli));
  print_summary(summary, cfg.out_dir, out);
  return kExitOk;
}

inline int cmd_pilot(const PilotFlags& f, const CliEnv& cli, std::ostream& out) {
  orchestrator::PilotConfig cfg;
  if (!f.config.empty()) {
    // Only the agent pool and retry limit of a config file apply to the pilot.
    const auto base = orchestrator::load_config_file({}, f.config);
    cfg.pool = base.pool;
    cfg.retry_limit = base.retry_limit;
  }
  cfg.comm = f.comm;
  cfg.grouping = orchestrator::grouping_from_name(f.grouping);
  cfg.trials = f.trials;
  cfg.rounds = f.rounds;
  if (f.seed) cfg.master_seed = *f.seed;
  if (f.jobs >= 0) cfg.parallelism = f.jobs;
  if (f.retry_limit >= 0) cfg.retry_limit = f.retry_limit;
  cfg.out_dir = f.out;
  cfg.mode = f.live ? orchestrator::RunMode::kLive : orchestrator::RunMode::kMock;
  cfg.validate();
  orchestrator::check_live_credentials(cfg, cli.env);
  const auto summary = orchestrator::run_pilot(cfg, hooks_for(cli));
  print_summary(summary, cfg.out_dir, out);
  return kExitOk;
}

inline int cmd_analyze(const DirFlags& f, std::ostream& out, std::ostream& err) {
  const fs::path in = f.in;
  const fs::path dest = f.out.empty() ? in / "analysis" : fs::path(f.out);
  const RunData data = load_run(in);
  if (!data.violations.empty()) {
    err << "warning: " << data.violations.size()
        << " validation problems in the input; run `dilemma validate` for details\n";
  }
  if (data.completed() == 0) {
    err << "error: zero completed trials in " << in.string() << " (" << data.files << " trial files)\n";
    return kExitConfig;
  }
  const auto result = analyze_run(data);
  write_outputs(dest, result.files);
  for (const auto& s : result.stats) {
    out << s.condition << ": n=" << s.n_completed << " (aborted " << s.n_aborted
        << "), mean payoff " << text::fixed(s.mean_payoff, 1) << "\n";
  }
  for (const auto& [name, content] : result.files) out << "wrote " << (dest / name).string() << "\n";
  return kExitOk;
}

inline int cmd_validate(const DirFlags& f, std::ostream& out) {
  const auto report = orchestrator::validate_run_dir(f.in);
  if (report.ok()) {
    out << "ok: " << report.files << " trial files, 0 violations\n";
    return kExitOk;
  }
  out << report.violations.size() << " violations in " << report.files << " trial files";
  if (report.violations.size() > 10) out << " (first 10 shown)";
  out << "\n";
  for (std::size_t i = 0; i < report.violations.size() && i < 10; ++i) {
    out << "  " << report.violations[i].str() << "\n";
  }
  return kExitInvalid;
}

inline int cmd_export(const DirFlags& f, std::ostream& out) {
  const fs::path in = f.in;
  const fs::path dest = f.out.empty() ? in / "export" : fs::path(f.out);
  const RunData data = load_run(in);
  if (data.files == 0) throw orchestrator::IoError("no .jsonl trial files in " + in.string());
  write_outputs(dest, {{"trials.csv", trials_csv(data)}, {"actions.csv", actions_csv(data)}});
  out << "wrote " << (dest / "trials.csv").string() << "\n"
      << "wrote " << (dest / "actions.csv").string() << "\n";
  return kExitOk;
}

inline void add_mode_flags(CLI::App* sub, bool& mock, bool& live) {
  auto* m = sub->add_flag("--mock", mock, "Use deterministic mock agents (default)");
  auto* l = sub->add_flag("--live", live, "Call the configured model endpoints");
  m->excludes(l);
}

}  // namespace detail

/// Parses argv and runs one subcommand; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr,
                   const CliEnv& cli = {}) {
  CLI::App app{"Multi-agent social dilemma experiments: run, pilot, analyze, validate, export", "dilemma"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  detail::RunFlags rf;
  auto* run = app.add_subcommand("run", "Run curriculum conditions and write one JSONL file per trial");
  run->add_option("--condition", rf.conditions,
                  "full_curriculum, scrambled, direct_precursor, control, or all (repeatable; default all)");
  run->add_option("--trials", rf.trials, "Trials per condition (default 30)")->check(CLI::PositiveNumber);
  run->add_option("--seed", rf.seed, "Master seed; required for scrambled");
  run->add_option("--config", rf.config, "JSON config file (agents, lesson generator, defaults)");
  run->add_option("--out", rf.out, "Output directory")->capture_default_str();
  run->add_option("--jobs", rf.jobs, "Trials run in parallel (default: hardware threads)")->check(CLI::NonNegativeNumber);
  run->add_option("--retry-limit", rf.retry_limit, "Format retries per decision (default 3)")
      ->check(CLI::NonNegativeNumber);
  detail::add_mode_flags(run, rf.mock, rf.live);

  detail::PilotFlags pf;
  auto* pilot = app.add_subcommand("pilot", "Run the Stag Hunt pilot with heterogeneous or coalition seating");
  auto* comm = pilot->add_flag("--comm", pf.comm, "Add the one-word communication phase");
  auto* no_comm = pilot->add_flag("--no-comm", pf.no_comm, "Plain Stag Hunt (default)");
  comm->excludes(no_comm);
  pilot->add_option("--grouping", pf.grouping, "hetero or coalition")
      ->capture_default_str()
      ->check(CLI::IsMember({"hetero", "coalition"}));
  pilot->add_option("--trials", pf.trials, "Trials")->capture_default_str()->check(CLI::PositiveNumber);
  pilot->add_option("--rounds", pf.rounds, "Rounds per game")->capture_default_str()->check(CLI::PositiveNumber);
  pilot->add_option("--seed", pf.seed, "Master seed (default 0)");
  pilot->add_option("--config", pf.config, "JSON config file; its agent pool is used");
  pilot->add_option("--out", pf.out, "Output directory")->capture_default_str();
  pilot->add_option("--jobs", pf.jobs, "Trials run in parallel")->check(CLI::NonNegativeNumber);
  pilot->add_option("--retry-limit", pf.retry_limit, "Format retries per decision")->check(CLI::NonNegativeNumber);
  detail::add_mode_flags(pilot, pf.mock, pf.live);

  detail::DirFlags af;
  auto* analyze = app.add_subcommand("analyze", "Compute condition statistics and trajectories from a run directory");
  analyze->add_option("--in", af.in, "Run directory")->required();
  analyze->add_option("--out", af.out, "Output directory (default <in>/analysis)");

  detail::DirFlags vf;
  auto* validate = app.add_subcommand("validate", "Check trial files against the event schema and recomputed payoffs");
  validate->add_option("--in", vf.in, "Run directory")->required();

  detail::DirFlags ef;
  auto* exp = app.add_subcommand("export", "Flatten a run directory into per-trial and per-action CSV tables");
  exp->add_option("--in", ef.in, "Run directory")->required();
  exp->add_option("--out", ef.out, "Output directory (default <in>/export)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (run->parsed()) return detail::cmd_run(rf, cli, out);
    if (pilot->parsed()) return detail::cmd_pilot(pf, cli, out);
    if (analyze->parsed()) return detail::cmd_analyze(af, out, err);
    if (validate->parsed()) return detail::cmd_validate(vf, out);
    if (exp->parsed()) return detail::cmd_export(ef, out);
  } catch (const llm::GatewayError& e) {
    const bool auth = e.code() == llm::GatewayErrc::kAuthConfig || e.code() == llm::GatewayErrc::kAuth;
    err << "error: " << e.what() << "\n";
    return auth ? kExitAuth : kExitConfig;
  } catch (const orchestrator::ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const curriculum::CurriculumError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GameError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const analysis::AnalysisError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const orchestrator::IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace dilemma::cli
