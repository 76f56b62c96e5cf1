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

#include "ampc/loop.hpp"

#include <sstream>

namespace ampc {

namespace {

bool bit_equal(const Vector &a, const Vector &b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

} // namespace

std::string to_string(Termination t) {
  switch (t) {
  case Termination::cost_threshold: return "cost-threshold";
  case Termination::step_limit: return "step-limit";
  case Termination::error: return "error";
  }
  return "error";
}

Termination termination_from_string(const std::string &s) {
  if (s == "cost-threshold") return Termination::cost_threshold;
  if (s == "step-limit") return Termination::step_limit;
  if (s == "error") return Termination::error;
  throw std::invalid_argument("unknown termination '" + s + "'");
}

void ClosedLoopTrace::finalize() {
  accumulated_cost = 0.0;
  n_star = 0;
  for (const auto &r : records) {
    accumulated_cost += r.stage_cost;
    n_star = std::max(n_star, r.horizon);
  }
}

ClosedLoopTrace run_fixed(const OcpSolver &solver, const Vector &x0, int n, const StopRule &stop,
                          double state_penalty_weight) {
  if (n < 2) throw std::invalid_argument("run_fixed: horizon must be >= 2");
  SolveSession session(solver, state_penalty_weight);
  ClosedLoopTrace trace;
  trace.initial_state = x0;
  trace.sampling_period = solver.model().sampling_period();
  trace.terminated = Termination::step_limit;

  Vector x = x0;
  std::optional<ControlSequence> warm;
  try {
    for (int i = 0; i < stop.max_steps; ++i) {
      const long calls_before = session.solver_calls();
      const OcpSolution sol = session.solve(x, n, warm ? &*warm : nullptr);
      StepRecord rec;
      rec.index = i;
      rec.state = x;
      rec.horizon = n;
      rec.applied_control = sol.controls.front();
      rec.stage_cost = sol.stage_costs.front();
      rec.value = sol.value;
      rec.open_loop = sol.controls;
      if (rec.stage_cost < stop.cost_threshold) {
        rec.solves_performed = static_cast<int>(session.solver_calls() - calls_before);
        trace.records.push_back(std::move(rec));
        trace.terminated = Termination::cost_threshold;
        break;
      }
      const Vector &next = sol.trajectory[1];
      const ControlSequence shifted = shift_controls(sol.controls, 1, n);
      const OcpSolution succ = session.solve(next, n, &shifted);
      rec.alpha = (sol.value - succ.value) / rec.stage_cost;
      rec.successor_open_loop = succ.controls;
      rec.solves_performed = static_cast<int>(session.solver_calls() - calls_before);
      trace.records.push_back(std::move(rec));
      x = next;
      warm = succ.controls;
    }
  } catch (const Error &e) {
    trace.terminated = Termination::error;
    trace.message = e.what();
  }
  trace.finalize();
  return trace;
}

ClosedLoopTrace run_adaptive(const OcpSolver &solver, const Vector &x0,
                             const AdaptiveOptions &options, const StopRule &stop) {
  AdaptationConfig config = options.adaptation;
  config.equilibrium_threshold = stop.cost_threshold;
  config.validate();
  const SystemModel &model = solver.model();
  const int n_init = options.initial_horizon.value_or(config.n_min);
  if (n_init < config.n_min || n_init > config.n_max)
    throw std::invalid_argument("run_adaptive: initial horizon outside [n_min, n_max]");

  SolveSession session(solver, options.state_penalty_weight);
  ClosedLoopTrace trace;
  trace.initial_state = x0;
  trace.sampling_period = model.sampling_period();
  trace.terminated = Termination::step_limit;

  Vector x = x0;
  int n_start = n_init;
  std::optional<ControlSequence> warm;
  int i = 0;
  auto limit_reached = [&] { return i >= stop.max_steps; };

  try {
    while (!limit_reached()) {
      const long calls_before = session.solver_calls();
      AdaptationPlan plan;
      try {
        plan = adapt_step(x, n_start, config, session, warm ? &*warm : nullptr);
      } catch (const EquilibriumReached &) {
        const OcpSolution sol = session.solve(x, n_start, warm ? &*warm : nullptr);
        StepRecord rec;
        rec.index = i;
        rec.state = x;
        rec.horizon = n_start;
        rec.applied_control = sol.controls.front();
        rec.stage_cost = sol.stage_costs.front();
        rec.value = sol.value;
        rec.open_loop = sol.controls;
        rec.solves_performed = static_cast<int>(session.solver_calls() - calls_before);
        trace.records.push_back(std::move(rec));
        trace.terminated = Termination::cost_threshold;
        break;
      }

      const AlphaEvaluation &ev = plan.evaluation;
      const OcpSolution &sol = ev.solution;
      const int N = plan.chosen_horizon;
      {
        StepRecord rec;
        rec.index = i;
        rec.state = x;
        rec.horizon = N;
        rec.applied_control = plan.applied_control;
        rec.stage_cost = ev.stage_cost;
        rec.value = sol.value;
        rec.alpha = plan.alpha_achieved;
        rec.solves_performed = plan.solves_performed;
        rec.open_loop = sol.controls;
        rec.successor_open_loop =
            ev.successor ? ev.successor->controls : shift_controls(sol.controls, 1, N);
        trace.records.push_back(std::move(rec));
      }
      x = sol.trajectory[1];
      ++i;

      // Replay the certified tail without solving.
      bool stopped = false;
      const int tail = static_cast<int>(plan.reusable_tail.size());
      int consumed = 1;
      for (int k = 1; k <= tail && !limit_reached(); ++k) {
        const Vector &u = plan.reusable_tail[k - 1];
        const Transition tr = model.transition(x, u);
        StepRecord rec;
        rec.index = i;
        rec.state = x;
        rec.horizon = N - k;
        rec.applied_control = u;
        rec.stage_cost = penalized_stage_cost(model, x, tr.cost, options.state_penalty_weight);
        rec.reused_from_tail = true;
        rec.predicted_state = sol.trajectory[k];
        if (k - 1 < static_cast<int>(plan.certificates.size())) {
          const auto &cert = plan.certificates[k - 1];
          rec.value = cert.v_now;
          rec.open_loop = cert.open_loop;
          rec.successor_open_loop = cert.successor_open_loop;
        } else {
          rec.value = 0.0;
          for (int j = k; j < sol.horizon(); ++j) rec.value += sol.stage_costs[j];
          rec.open_loop = shift_controls(sol.controls, k, N - k);
          rec.successor_open_loop = shift_controls(sol.controls, k + 1, N - k);
        }
        const bool at_equilibrium = rec.stage_cost < stop.cost_threshold;
        trace.records.push_back(std::move(rec));
        ++i;
        ++consumed;
        if (at_equilibrium) {
          trace.terminated = Termination::cost_threshold;
          stopped = true;
          break;
        }
        x = tr.next_state;
      }
      if (stopped) break;

      n_start = plan.next_horizon;
      warm = shift_controls(sol.controls, consumed, n_start);
    }
  } catch (const HorizonCapReached &e) {
    trace.terminated = Termination::error;
    trace.message = std::string("HorizonCapReached: ") + e.what();
  } catch (const Error &e) {
    trace.terminated = Termination::error;
    trace.message = e.what();
  }
  trace.finalize();
  return trace;
}

bool VerificationReport::ok() const {
  return violations.empty() && replay_mismatches.empty() && dynamics_consistent &&
         cost_consistent;
}

VerificationReport verify_trace(const ClosedLoopTrace &trace, const OcpSolver &solver,
                                double alpha_bar, const VerifyOptions &options) {
  VerificationReport report;
  const auto &recs = trace.records;
  if (recs.empty()) return report;
  const SystemModel &model = solver.model();
  const double rho = options.state_penalty_weight;

  auto resolve = [&](const Vector &x, int horizon, const ControlSequence &seed) {
    OcpInstance inst;
    inst.x0 = x;
    inst.horizon = horizon;
    inst.state_penalty_weight = rho;
    if (options.warm_start == WarmStartPolicy::recorded && !seed.empty())
      inst.warm_start = shift_controls(seed, 0, horizon);
    return solver.solve(inst);
  };

  double sum = 0.0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const StepRecord &r = recs[i];
    sum += r.stage_cost;
    if (r.stage_cost != penalized_stage_cost(model, r.state, r.applied_control, rho))
      report.cost_consistent = false;
    if (i + 1 < recs.size() && !bit_equal(step(model, r.state, r.applied_control), recs[i + 1].state))
      report.dynamics_consistent = false;
    if (r.predicted_state && !bit_equal(*r.predicted_state, r.state))
      report.replay_mismatches.push_back(r.index);
    if (r.alpha) report.alpha_min = std::min(report.alpha_min, *r.alpha);
    if (r.reused_from_tail) report.alpha_min = std::min(report.alpha_min, alpha_bar);
  }
  if (std::abs(sum - trace.accumulated_cost) > 1e-12 * std::max(1.0, std::abs(sum)))
    report.cost_consistent = false;

  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    const StepRecord &r = recs[i];
    StepCheck c;
    c.index = r.index;
    c.reused = r.reused_from_tail;
    c.stage_cost = r.stage_cost;
    c.v_now = resolve(r.state, r.horizon, r.open_loop).value;
    const ControlSequence succ_seed =
        !r.successor_open_loop.empty()
            ? r.successor_open_loop
            : (r.open_loop.empty() ? ControlSequence{} : shift_controls(r.open_loop, 1, r.horizon));
    c.v_next = resolve(recs[i + 1].state, r.horizon, succ_seed).value;
    c.slack = c.v_now - c.v_next - alpha_bar * r.stage_cost;
    c.replay_exact = !r.predicted_state || bit_equal(*r.predicted_state, r.state);
    if (c.slack < -options.slack_tolerance) report.violations.push_back(r.index);
    report.steps.push_back(c);
  }

  if (options.sandwich) {
    const int n_star = trace.n_star;
    double tail_sum = 0.0;
    std::vector<SandwichCheck> checks(recs.size());
    for (std::size_t j = recs.size(); j-- > 0;) {
      const StepRecord &r = recs[j];
      tail_sum += r.stage_cost;
      SandwichCheck s;
      s.index = r.index;
      const double a = std::isfinite(report.alpha_min) ? report.alpha_min : 1.0;
      s.lhs = a * tail_sum;
      s.rhs = resolve(r.state, n_star, r.open_loop).value;
      s.holds = s.lhs <= s.rhs * (1.0 + options.sandwich_relative_tolerance);
      checks[j] = s;
    }
    report.sandwich = std::move(checks);
  }
  return report;
}

} // namespace ampc
