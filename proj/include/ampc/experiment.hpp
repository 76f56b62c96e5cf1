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

#ifndef AMPC_EXPERIMENT_HPP
#define AMPC_EXPERIMENT_HPP

#include "ampc/bench.hpp"
#include "ampc/loop.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>

namespace ampc {

/// Malformed or invalid configuration. `line` is 0 for overrides and for
/// problems not tied to one line.
class ConfigError : public Error {
public:
  ConfigError(const std::string &what, std::string field, int line = 0)
      : Error(what), field_(std::move(field)), line_(line) {}
  const std::string &field() const { return field_; }
  int line() const { return line_; }

private:
  std::string field_;
  int line_;
};

enum class ModelChoice { crane, lq, finite };
enum class RunMode { adaptive, fixed };

struct ExperimentConfig {
  ModelChoice model = ModelChoice::crane;
  RunMode mode = RunMode::adaptive;
  std::vector<double> alpha_grid{0.5};
  /// Horizon of fixed-mode runs.
  int horizon = 5;
  AdaptationConfig adaptation;
  std::optional<int> initial_horizon;
  SolverOptions solver;
  double state_penalty_weight = 1e3;
  double integrator_tolerance = 1e-9;
  StopRule stop;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  std::optional<Vector> x0;
  LqSystem lq = LqSystem::scalar(1.0, 1.0, 1.0, 1.0);

  void validate() const;
};

/// Flat `key = value` text with `#` comments. Values keep their source line
/// for diagnostics.
class KeyValueConfig {
public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueConfig parse(std::istream &in);
  static KeyValueConfig load(const std::filesystem::path &path);
  /// Applies "key=value"; throws ConfigError if malformed.
  void set_override(const std::string &assignment);

  const std::map<std::string, Entry> &entries() const { return entries_; }

private:
  std::map<std::string, Entry> entries_;
};

ExperimentConfig build_config(const KeyValueConfig &kv);

struct SummaryRow {
  double alpha_bar = 0.0;
  double accumulated_cost = 0.0;
  int steps = 0;
  int n_star = 0;
  long total_solves = 0;
  double wall_time_s = 0.0;
  Termination terminated = Termination::step_limit;
  std::string trace_file;
};

/// Summary fields derivable from a trace alone (wall time excluded).
SummaryRow summarize(const ClosedLoopTrace &trace, double alpha_bar);

struct RunOutput {
  double alpha_bar = 0.0;
  ClosedLoopTrace trace;
  SummaryRow summary;
};

struct ExperimentResult {
  std::vector<RunOutput> runs;
  int exit_code = 0;
};

std::shared_ptr<const SystemModel> make_model(const ExperimentConfig &config);
Vector default_initial_state(const ExperimentConfig &config);

/// Runs every configured closed loop and writes trace, summary and figure
/// CSVs into config.output_dir. Exit code 3 if any run ended in error.
ExperimentResult run_experiment(const ExperimentConfig &config, int jobs = 1,
                                std::ostream *log = nullptr);

enum class FigureKind { alpha_vs_cost, horizon_vs_time };

FigureKind figure_kind_from_string(const std::string &s);

/// alpha-vs-cost: (alpha_bar, accumulated_cost) per run.
/// horizon-vs-time: (alpha_bar, time, horizon) per record; the horizon holds
/// over [time, time + T).
void emit_figure_data(const std::vector<RunOutput> &runs, FigureKind kind,
                      const std::filesystem::path &path);

// CSV dialect: comma separated, header row, '\n' endings, doubles with 17
// significant digits. Files are written to a temporary and renamed into place.
void write_trace_csv(const ClosedLoopTrace &trace, const std::filesystem::path &path);
ClosedLoopTrace read_trace_csv(const std::filesystem::path &path);
void write_summary_csv(const std::vector<SummaryRow> &rows, const std::filesystem::path &path);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path &path);

std::string format_double(double v);
void write_file_atomic(const std::filesystem::path &path, const std::string &contents);

} // namespace ampc

#endif // AMPC_EXPERIMENT_HPP
