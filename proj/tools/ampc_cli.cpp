/*
 * Copyright 2026 The ampc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ampc/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char **argv) {
  CLI::App app{"Adaptive-horizon MPC experiment runner"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "Run closed loops described by a config file");
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool quiet = false;
  int jobs = 1;
  run->add_option("config", config_path, "Config file (key = value lines)")->required();
  run->add_option("--override", overrides, "key=value, applied after the file")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_flag("--quiet", quiet, "Suppress per-run progress lines");
  run->add_option("--jobs", jobs, "Parallel sweep entries")->check(CLI::PositiveNumber);

  auto *fig = app.add_subcommand("figure", "Regenerate figure data from a summary CSV");
  std::string summary_path, kind_name, fig_out;
  fig->add_option("summary", summary_path, "summary.csv written by 'run'")->required();
  fig->add_option("--kind", kind_name, "alpha-vs-cost | horizon-vs-time")
      ->required()
      ->check(CLI::IsMember({"alpha-vs-cost", "horizon-vs-time"}));
  fig->add_option("--out", fig_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*run) {
    ampc::ExperimentConfig config;
    try {
      auto kv = ampc::KeyValueConfig::load(config_path);
      for (const auto &o : overrides) kv.set_override(o);
      if (!out_dir.empty()) kv.set_override("output.dir=" + out_dir);
      config = ampc::build_config(kv);
    } catch (const ampc::ConfigError &e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    }
    try {
      const auto result = ampc::run_experiment(config, jobs, quiet ? nullptr : &std::cout);
      if (result.exit_code != 0) {
        for (const auto &r : result.runs)
          if (r.trace.terminated == ampc::Termination::error)
            std::cerr << "run alpha_bar=" << r.alpha_bar << " failed: " << r.trace.message << '\n';
      }
      return result.exit_code;
    } catch (const ampc::ConfigError &e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << '\n';
      return 3;
    }
  }

  try {
    const std::filesystem::path summary(summary_path);
    const auto rows = ampc::read_summary_csv(summary);
    std::vector<ampc::RunOutput> runs;
    for (const auto &row : rows) {
      ampc::RunOutput r;
      r.alpha_bar = row.alpha_bar;
      r.summary = row;
      r.trace = ampc::read_trace_csv(summary.parent_path() / row.trace_file);
      runs.push_back(std::move(r));
    }
    ampc::emit_figure_data(runs, ampc::figure_kind_from_string(kind_name), fig_out);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
