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

#ifndef AMPC_LOOP_HPP
#define AMPC_LOOP_HPP

#include "ampc/adapt.hpp"

#include <string>

namespace ampc {

/// Terminate once the applied stage cost drops below cost_threshold, or after
/// max_steps records.
struct StopRule {
  double cost_threshold = 1e-3;
  int max_steps = 500;
};

struct StepRecord {
  int index = 0;
  Vector state;
  int horizon = 0;
  Vector applied_control;
  double stage_cost = 0.0;
  double value = 0.0;
  /// Estimator output; absent on reused steps (certified at alpha_bar) and on
  /// the terminal step.
  std::optional<double> alpha;
  int solves_performed = 0;
  bool reused_from_tail = false;

  // Verification data. Controls of the solve that produced `value` and of the
  // solve at the successor state with the same horizon; both seed re-solves.
  ControlSequence open_loop;
  ControlSequence successor_open_loop;
  /// Open-loop state this reused step was predicted to reach.
  std::optional<Vector> predicted_state;
};

enum class Termination { cost_threshold, step_limit, error };

std::string to_string(Termination t);
Termination termination_from_string(const std::string &s);

struct ClosedLoopTrace {
  Vector initial_state;
  std::vector<StepRecord> records;
  Termination terminated = Termination::step_limit;
  std::string message;
  double accumulated_cost = 0.0;
  int n_star = 0;
  double sampling_period = 1.0;

  /// Recomputes accumulated_cost and n_star from the records.
  void finalize();
};

/// Fixed-horizon MPC. Each step records V_n(x(i)) and the a posteriori alpha
/// from the solve at the successor, which doubles as the next step's solve.
ClosedLoopTrace run_fixed(const OcpSolver &solver, const Vector &x0, int n, const StopRule &stop,
                          double state_penalty_weight = 0.0);

struct AdaptiveOptions {
  AdaptationConfig adaptation;
  /// Horizon tried at step 0; defaults to n_min.
  std::optional<int> initial_horizon;
  double state_penalty_weight = 0.0;
};

/// Adaptive-horizon MPC. Certified spans replay the stored open loop with
/// decreasing horizons and no solver calls.
ClosedLoopTrace run_adaptive(const OcpSolver &solver, const Vector &x0,
                             const AdaptiveOptions &options, const StopRule &stop);

enum class WarmStartPolicy { recorded, cold };

struct VerifyOptions {
  WarmStartPolicy warm_start = WarmStartPolicy::recorded;
  double state_penalty_weight = 0.0;
  bool sandwich = true;
  double slack_tolerance = 1e-8;
  double sandwich_relative_tolerance = 1e-6;
};

struct StepCheck {
  int index = 0;
  bool reused = false;
  double v_now = 0.0;
  double v_next = 0.0;
  double stage_cost = 0.0;
  double slack = 0.0;
  bool replay_exact = true;
};

struct SandwichCheck {
  int index = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

struct VerificationReport {
  std::vector<StepCheck> steps;
  std::vector<SandwichCheck> sandwich;
  double alpha_min = kInfinity;
  bool dynamics_consistent = true;
  bool cost_consistent = true;
  /// Indices of steps whose slack is below -slack_tolerance.
  std::vector<int> violations;
  std::vector<int> replay_mismatches;

  bool ok() const;
};

/// Re-solves V_{N_i} at x(i) and x(i+1) with fresh solver calls and checks
/// V_{N_i}(x(i)) >= V_{N_i}(x(i+1)) + alpha_bar * l_i at every step that has a
/// successor. Also checks replayed states, dynamics consistency and the finite
/// sandwich alpha_min * sum_{i>=n} l_i <= V_{N*}(x(n)).
VerificationReport verify_trace(const ClosedLoopTrace &trace, const OcpSolver &solver,
                                double alpha_bar, const VerifyOptions &options = {});

} // namespace ampc

#endif // AMPC_LOOP_HPP
