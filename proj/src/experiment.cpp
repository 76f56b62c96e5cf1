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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace ampc {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string> &known_keys() {
  static const std::set<std::string> keys{
      "model",         "mode",          "horizon",         "alpha_bar",
      "x0",            "seed",          "adapt.n_min",     "adapt.n_max",
      "adapt.n_initial", "adapt.n0",    "adapt.n_hat",     "adapt.estimator",
      "adapt.shortening", "solver.tol", "solver.penalty",  "solver.max_iterations",
      "solver.fd_step", "integrator.tol", "stop.cost_threshold", "stop.max_steps",
      "output.dir",    "lq.A",          "lq.B",            "lq.Q",
      "lq.R"};
  return keys;
}

struct FieldReader {
  const std::string &key;
  const KeyValueConfig::Entry &entry;

  [[noreturn]] void fail(const std::string &why) const {
    std::ostringstream msg;
    if (entry.line > 0) msg << "line " << entry.line << ": ";
    msg << key << ": " << why;
    throw ConfigError(msg.str(), key, entry.line);
  }

  double real() const {
    const std::string v = trim(entry.value);
    char *end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
      fail("expected a finite number, got '" + entry.value + "'");
    return d;
  }

  long integer() const {
    const std::string v = trim(entry.value);
    char *end = nullptr;
    const long i = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size()) fail("expected an integer, got '" + entry.value + "'");
    return i;
  }

  std::vector<double> list(const std::string &text) const {
    std::string norm = text;
    std::replace(norm.begin(), norm.end(), ',', ' ');
    std::istringstream ss(norm);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
      char *end = nullptr;
      const double d = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || !std::isfinite(d)) fail("bad number '" + tok + "'");
      out.push_back(d);
    }
    if (out.empty()) fail("empty list");
    return out;
  }

  std::vector<double> list() const { return list(entry.value); }

  Matrix matrix() const {
    std::vector<std::vector<double>> rows;
    std::istringstream ss(entry.value);
    std::string row;
    while (std::getline(ss, row, ';')) rows.push_back(list(row));
    if (rows.empty()) fail("empty matrix");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) fail("ragged matrix rows");
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
  }
};

std::string alpha_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

} // namespace

void ExperimentConfig::validate() const {
  auto bad = [](const std::string &field, const std::string &why) {
    throw ConfigError(field + ": " + why, field);
  };
  if (alpha_grid.empty()) bad("alpha_bar", "no values");
  for (double a : alpha_grid)
    if (!(a > 0.0 && a < 1.0)) bad("alpha_bar", "values must lie in (0, 1), got " + format_double(a));
  if (!(solver.tolerance > 0.0)) bad("solver.tol", "must be positive");
  if (!(solver.fd_step > 0.0)) bad("solver.fd_step", "must be positive");
  if (solver.max_iterations < 1) bad("solver.max_iterations", "must be >= 1");
  if (!(state_penalty_weight >= 0.0)) bad("solver.penalty", "must be non-negative");
  if (!(integrator_tolerance > 0.0)) bad("integrator.tol", "must be positive");
  if (!(stop.cost_threshold > 0.0)) bad("stop.cost_threshold", "must be positive");
  if (stop.max_steps < 1) bad("stop.max_steps", "must be >= 1");
  if (mode == RunMode::fixed && horizon < 2) bad("horizon", "must be >= 2");
  try {
    AdaptationConfig probe = adaptation;
    probe.alpha_bar = alpha_grid.front();
    probe.validate();
  } catch (const std::invalid_argument &e) {
    bad("adapt", e.what());
  }
  if (initial_horizon && (*initial_horizon < adaptation.n_min || *initial_horizon > adaptation.n_max))
    bad("adapt.n_initial", "must lie in [n_min, n_max]");
  if (model == ModelChoice::lq) {
    try {
      lq.validate();
    } catch (const std::exception &e) {
      bad("lq", e.what());
    }
  }
  if (x0) {
    const long nx = model == ModelChoice::crane ? 6 : model == ModelChoice::lq ? lq.state_dim() : 1;
    if (x0->size() != nx) bad("x0", "expected " + std::to_string(nx) + " entries");
  }
}

KeyValueConfig KeyValueConfig::parse(std::istream &in) {
  KeyValueConfig kv;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'", "", line);
    const std::string key = trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key", "", line);
    if (kv.entries_.count(key))
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'", key, line);
    kv.entries_[key] = Entry{trim(text.substr(eq + 1)), line};
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string(), "");
  return parse(in);
}

void KeyValueConfig::set_override(const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not key=value", "");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key", "");
  entries_[key] = Entry{trim(assignment.substr(eq + 1)), 0};
}

ExperimentConfig build_config(const KeyValueConfig &kv) {
  ExperimentConfig c;
  for (const auto &[key, entry] : kv.entries()) {
    const FieldReader r{key, entry};
    if (!known_keys().count(key)) r.fail("unknown key");
    const std::string &v = entry.value;
    if (key == "model") {
      if (v == "crane") c.model = ModelChoice::crane;
      else if (v == "lq") c.model = ModelChoice::lq;
      else if (v == "finite") c.model = ModelChoice::finite;
      else r.fail("expected crane, lq or finite");
    } else if (key == "mode") {
      if (v == "adaptive") c.mode = RunMode::adaptive;
      else if (v == "fixed") c.mode = RunMode::fixed;
      else r.fail("expected adaptive or fixed");
    } else if (key == "horizon") {
      c.horizon = static_cast<int>(r.integer());
    } else if (key == "alpha_bar") {
      c.alpha_grid = r.list();
    } else if (key == "x0") {
      const auto xs = r.list();
      c.x0 = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    } else if (key == "seed") {
      const long s = r.integer();
      if (s < 0) r.fail("must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "adapt.n_min") {
      c.adaptation.n_min = static_cast<int>(r.integer());
    } else if (key == "adapt.n_max") {
      c.adaptation.n_max = static_cast<int>(r.integer());
    } else if (key == "adapt.n_initial") {
      c.initial_horizon = static_cast<int>(r.integer());
    } else if (key == "adapt.n0") {
      c.adaptation.n0 = static_cast<int>(r.integer());
    } else if (key == "adapt.n_hat") {
      c.adaptation.n_hat = static_cast<int>(r.integer());
    } else if (key == "adapt.estimator") {
      if (v == "a-posteriori") c.adaptation.estimator = EstimatorKind::a_posteriori;
      else if (v == "a-priori") c.adaptation.estimator = EstimatorKind::a_priori;
      else r.fail("expected a-posteriori or a-priori");
    } else if (key == "adapt.shortening") {
      if (v == "certified") c.adaptation.shortening = ShorteningMode::certified;
      else if (v == "heuristic-decrement") c.adaptation.shortening = ShorteningMode::heuristic_decrement;
      else r.fail("expected certified or heuristic-decrement");
    } else if (key == "solver.tol") {
      c.solver.tolerance = r.real();
    } else if (key == "solver.penalty") {
      c.state_penalty_weight = r.real();
    } else if (key == "solver.max_iterations") {
      c.solver.max_iterations = static_cast<int>(r.integer());
    } else if (key == "solver.fd_step") {
      c.solver.fd_step = r.real();
    } else if (key == "integrator.tol") {
      c.integrator_tolerance = r.real();
    } else if (key == "stop.cost_threshold") {
      c.stop.cost_threshold = r.real();
    } else if (key == "stop.max_steps") {
      c.stop.max_steps = static_cast<int>(r.integer());
    } else if (key == "output.dir") {
      if (v.empty()) r.fail("empty path");
      c.output_dir = v;
    } else if (key == "lq.A") {
      c.lq.A = r.matrix();
    } else if (key == "lq.B") {
      c.lq.B = r.matrix();
    } else if (key == "lq.Q") {
      c.lq.Q = r.matrix();
    } else if (key == "lq.R") {
      c.lq.R = r.matrix();
    }
  }
  // Re-raise range errors with the offending line when one is known.
  try {
    c.validate();
  } catch (const ConfigError &e) {
    std::string field = e.field();
    if (field == "adapt" || field == "lq") throw;
    const auto it = kv.entries().find(field);
    if (it == kv.entries().end() || it->second.line == 0) throw;
    throw ConfigError("line " + std::to_string(it->second.line) + ": " + e.what(), field,
                      it->second.line);
  }
  return c;
}

SummaryRow summarize(const ClosedLoopTrace &trace, double alpha_bar) {
  SummaryRow row;
  row.alpha_bar = alpha_bar;
  row.accumulated_cost = trace.accumulated_cost;
  row.steps = static_cast<int>(trace.records.size());
  row.n_star = trace.n_star;
  for (const auto &r : trace.records) row.total_solves += r.solves_performed;
  row.terminated = trace.terminated;
  return row;
}

std::shared_ptr<const SystemModel> make_model(const ExperimentConfig &config) {
  switch (config.model) {
  case ModelChoice::crane: {
    CraneParameters p;
    p.integrator_tolerance = config.integrator_tolerance;
    return crane_model(p);
  }
  case ModelChoice::lq:
    return lq_model(config.lq);
  case ModelChoice::finite:
    return finite_benchmark_system().model;
  }
  throw std::logic_error("make_model: unknown model");
}

Vector default_initial_state(const ExperimentConfig &config) {
  if (config.x0) return *config.x0;
  switch (config.model) {
  case ModelChoice::crane:
    return crane_initial_state();
  case ModelChoice::lq:
    return Vector::Ones(config.lq.state_dim());
  case ModelChoice::finite:
    return Vector::Ones(1);
  }
  throw std::logic_error("default_initial_state: unknown model");
}

ExperimentResult run_experiment(const ExperimentConfig &config, int jobs, std::ostream *log) {
  config.validate();
  const auto model = make_model(config);
  const OcpSolver solver(model, config.solver);
  const Vector x0 = default_initial_state(config);

  // Fixed-horizon runs do not depend on alpha_bar; one run carries the first
  // grid value as its label.
  std::vector<double> alphas = config.alpha_grid;
  if (config.mode == RunMode::fixed) alphas.resize(1);

  ExperimentResult result;
  result.runs.resize(alphas.size());
  std::vector<std::string> names(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i)
    names[i] = config.mode == RunMode::fixed ? "trace_fixed_N" + std::to_string(config.horizon) + ".csv"
                                             : "trace_alpha_" + alpha_tag(alphas[i]) + ".csv";

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < alphas.size(); i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      ClosedLoopTrace trace;
      if (config.mode == RunMode::fixed) {
        trace = run_fixed(solver, x0, config.horizon, config.stop, config.state_penalty_weight);
      } else {
        AdaptiveOptions opts;
        opts.adaptation = config.adaptation;
        opts.adaptation.alpha_bar = alphas[i];
        opts.initial_horizon = config.initial_horizon;
        opts.state_penalty_weight = config.state_penalty_weight;
        trace = run_adaptive(solver, x0, opts, config.stop);
      }
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_trace_csv(trace, config.output_dir / names[i]);
      RunOutput &out = result.runs[i];
      out.alpha_bar = alphas[i];
      out.summary = summarize(trace, alphas[i]);
      out.summary.wall_time_s = secs;
      out.summary.trace_file = names[i];
      out.trace = std::move(trace);
      if (log) {
        std::lock_guard<std::mutex> lock(log_mutex);
        *log << "alpha_bar=" << alpha_tag(alphas[i]) << " steps=" << out.summary.steps
             << " cost=" << format_double(out.summary.accumulated_cost)
             << " n_star=" << out.summary.n_star << " solves=" << out.summary.total_solves
             << " time=" << secs << "s " << to_string(out.trace.terminated);
        if (!out.trace.message.empty()) *log << " (" << out.trace.message << ")";
        *log << '\n';
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(alphas.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();

  std::vector<SummaryRow> rows;
  for (const auto &r : result.runs) {
    rows.push_back(r.summary);
    if (r.trace.terminated == Termination::error) result.exit_code = 3;
  }
  write_summary_csv(rows, config.output_dir / "summary.csv");
  emit_figure_data(result.runs, FigureKind::alpha_vs_cost, config.output_dir / "figure_alpha_vs_cost.csv");
  emit_figure_data(result.runs, FigureKind::horizon_vs_time,
                   config.output_dir / "figure_horizon_vs_time.csv");
  return result;
}

FigureKind figure_kind_from_string(const std::string &s) {
  if (s == "alpha-vs-cost") return FigureKind::alpha_vs_cost;
  if (s == "horizon-vs-time") return FigureKind::horizon_vs_time;
  throw std::invalid_argument("unknown figure kind '" + s + "'");
}

void emit_figure_data(const std::vector<RunOutput> &runs, FigureKind kind, const fs::path &path) {
  if (runs.empty()) throw std::invalid_argument("emit_figure_data: no runs");
  std::ostringstream out;
  if (kind == FigureKind::alpha_vs_cost) {
    out << "alpha_bar,accumulated_cost\n";
    for (const auto &r : runs)
      out << format_double(r.alpha_bar) << ',' << format_double(r.trace.accumulated_cost) << '\n';
  } else {
    out << "alpha_bar,time,horizon\n";
    for (const auto &r : runs)
      for (const auto &rec : r.trace.records)
        out << format_double(r.alpha_bar) << ',' << format_double(rec.index * r.trace.sampling_period)
            << ',' << rec.horizon << '\n';
  }
  write_file_atomic(path, out.str());
}

} // namespace ampc
