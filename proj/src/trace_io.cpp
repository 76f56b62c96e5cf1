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

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ampc {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const fs::path &path, const std::string &contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string &s, const std::string &what) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("malformed number '" + s + "' in " + what);
  return v;
}

long parse_long(const std::string &s, const std::string &what) {
  char *end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("malformed integer '" + s + "' in " + what);
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::runtime_error("missing CSV column '" + name + "'");
  }
};

CsvTable read_csv(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV file " + path.string());
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw std::runtime_error("row width differs from header in " + path.string());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

} // namespace

void write_trace_csv(const ClosedLoopTrace &trace, const fs::path &path) {
  const int nx = static_cast<int>(trace.initial_state.size());
  int nu = 0;
  if (!trace.records.empty()) nu = static_cast<int>(trace.records.front().applied_control.size());
  std::ostringstream out;
  out << "index,time,horizon,reused,solves,stage_cost,value,alpha,terminated";
  for (int j = 0; j < nx; ++j) out << ",x" << j;
  for (int j = 0; j < nu; ++j) out << ",u" << j;
  out << '\n';
  for (const auto &r : trace.records) {
    out << r.index << ',' << format_double(r.index * trace.sampling_period) << ',' << r.horizon
        << ',' << (r.reused_from_tail ? 1 : 0) << ',' << r.solves_performed << ','
        << format_double(r.stage_cost) << ',' << format_double(r.value) << ','
        << (r.alpha ? format_double(*r.alpha) : std::string()) << ','
        << (&r == &trace.records.back() ? to_string(trace.terminated) : std::string());
    for (int j = 0; j < nx; ++j) out << ',' << format_double(r.state[j]);
    for (int j = 0; j < nu; ++j) out << ',' << format_double(r.applied_control[j]);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

ClosedLoopTrace read_trace_csv(const fs::path &path) {
  const CsvTable t = read_csv(path);
  const std::string what = path.string();
  std::vector<int> xcols, ucols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i].size() > 1 && t.header[i][0] == 'x') xcols.push_back(static_cast<int>(i));
    if (t.header[i].size() > 1 && t.header[i][0] == 'u') ucols.push_back(static_cast<int>(i));
  }
  const int c_index = t.column("index"), c_time = t.column("time"), c_h = t.column("horizon"),
            c_reused = t.column("reused"), c_solves = t.column("solves"),
            c_cost = t.column("stage_cost"), c_value = t.column("value"),
            c_alpha = t.column("alpha"), c_term = t.column("terminated");

  ClosedLoopTrace trace;
  for (const auto &row : t.rows) {
    StepRecord r;
    r.index = static_cast<int>(parse_long(row[c_index], what));
    r.horizon = static_cast<int>(parse_long(row[c_h], what));
    r.reused_from_tail = parse_long(row[c_reused], what) != 0;
    r.solves_performed = static_cast<int>(parse_long(row[c_solves], what));
    r.stage_cost = parse_double(row[c_cost], what);
    r.value = parse_double(row[c_value], what);
    if (!row[c_alpha].empty()) r.alpha = parse_double(row[c_alpha], what);
    r.state.resize(static_cast<Eigen::Index>(xcols.size()));
    for (std::size_t j = 0; j < xcols.size(); ++j) r.state[j] = parse_double(row[xcols[j]], what);
    r.applied_control.resize(static_cast<Eigen::Index>(ucols.size()));
    for (std::size_t j = 0; j < ucols.size(); ++j)
      r.applied_control[j] = parse_double(row[ucols[j]], what);
    if (r.index > 0 && trace.sampling_period == 1.0)
      trace.sampling_period = parse_double(row[c_time], what) / r.index;
    if (!row[c_term].empty()) trace.terminated = termination_from_string(row[c_term]);
    trace.records.push_back(std::move(r));
  }
  if (!trace.records.empty()) trace.initial_state = trace.records.front().state;
  trace.finalize();
  return trace;
}

void write_summary_csv(const std::vector<SummaryRow> &rows, const fs::path &path) {
  std::ostringstream out;
  out << "alpha_bar,accumulated_cost,steps,n_star,total_solves,wall_time_s,terminated,trace_file\n";
  for (const auto &r : rows)
    out << format_double(r.alpha_bar) << ',' << format_double(r.accumulated_cost) << ','
        << r.steps << ',' << r.n_star << ',' << r.total_solves << ','
        << format_double(r.wall_time_s) << ',' << to_string(r.terminated) << ','
        << r.trace_file << '\n';
  write_file_atomic(path, out.str());
}

std::vector<SummaryRow> read_summary_csv(const fs::path &path) {
  const CsvTable t = read_csv(path);
  const std::string what = path.string();
  std::vector<SummaryRow> rows;
  for (const auto &row : t.rows) {
    SummaryRow r;
    r.alpha_bar = parse_double(row[t.column("alpha_bar")], what);
    r.accumulated_cost = parse_double(row[t.column("accumulated_cost")], what);
    r.steps = static_cast<int>(parse_long(row[t.column("steps")], what));
    r.n_star = static_cast<int>(parse_long(row[t.column("n_star")], what));
    r.total_solves = parse_long(row[t.column("total_solves")], what);
    r.wall_time_s = parse_double(row[t.column("wall_time_s")], what);
    r.terminated = termination_from_string(row[t.column("terminated")]);
    r.trace_file = row[t.column("trace_file")];
    rows.push_back(std::move(r));
  }
  return rows;
}

} // namespace ampc
