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

#ifndef AMPC_OCP_HPP
#define AMPC_OCP_HPP

#include "ampc/model.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace ampc {

struct SolverOptions {
  /// Stationarity tolerance on the projected gradient, scaled by max(1, |J|).
  double tolerance = 1e-6;
  int max_iterations = 500;
  /// Central-difference step, scaled by max(1, |u_j|).
  double fd_step = 1e-6;
  double armijo = 1e-4;
  int max_backtracks = 40;
};

/// Finite horizon problem min_u J_N(x0, u).
struct OcpInstance {
  Vector x0;
  int horizon = 1;
  std::optional<ControlSequence> warm_start;
  /// Weight of the quadratic exterior penalty on state-box violation.
  double state_penalty_weight = 0.0;
};

enum class SolveStatus { converged, max_iterations, stalled };

struct OcpSolution {
  ControlSequence controls;
  StateSequence trajectory;
  double value = 0.0;
  std::vector<double> stage_costs;
  bool converged = false;
  SolveStatus status = SolveStatus::stalled;
  int iterations = 0;
  double first_order_residual = 0.0;

  int horizon() const { return static_cast<int>(controls.size()); }
};

/// Stage cost used by the optimizer and the closed loop:
/// l(x, u) + rho * dist(x, X)^2. With rho = 0 this is the model's stage cost.
double penalized_stage_cost(const SystemModel &model, const Vector &x, double model_cost,
                            double rho);
double penalized_stage_cost(const SystemModel &model, const Vector &x, const Vector &u,
                            double rho);

/// Direct single shooting with a projected quasi-Newton method on the control box.
class OcpSolver {
public:
  explicit OcpSolver(std::shared_ptr<const SystemModel> model, SolverOptions options = {});

  const SystemModel &model() const { return *model_; }
  std::shared_ptr<const SystemModel> model_ptr() const { return model_; }
  const SolverOptions &options() const { return options_; }
  /// Number of solve() calls so far, shared among copies of this solver.
  long solve_count() const { return solve_count_->load(); }

  /// Throws NonFiniteObjective if J is not finite at the initial iterate.
  /// Hitting the iteration limit is not an error: the best iterate is returned
  /// with converged = false.
  OcpSolution solve(const OcpInstance &instance) const;
  double value(const OcpInstance &instance) const { return solve(instance).value; }
  Vector feedback(const OcpInstance &instance) const { return solve(instance).controls.front(); }

  /// J_N(x0, u) including the state penalty. Infinite if the dynamics fail.
  double objective(const Vector &x0, const ControlSequence &controls, double rho) const;
  /// Gradient of J_N with respect to the stage-major flattened controls.
  Vector gradient(const Vector &x0, const ControlSequence &controls, double rho) const;

private:
  struct Evaluation;
  Evaluation evaluate(const Vector &x0, const Vector &z, int horizon, double rho) const;
  Vector gradient_at(const Evaluation &eval, const Vector &z, double rho) const;

  std::shared_ptr<const SystemModel> model_;
  SolverOptions options_;
  std::shared_ptr<std::atomic<long>> solve_count_ = std::make_shared<std::atomic<long>>(0);
};

/// Drops the first `shift` controls and pads with the last one to `horizon`.
ControlSequence shift_controls(const ControlSequence &controls, int shift, int horizon);

/// A solver bound to one penalty weight, memoizing solutions by
/// (state bit pattern, horizon). Safe for concurrent use; two threads asking
/// for the same key may both solve, and the first stored result wins.
class SolveSession {
public:
  SolveSession(const OcpSolver &solver, double state_penalty_weight);

  const OcpSolver &solver() const { return solver_; }
  const SystemModel &model() const { return solver_.model(); }
  double penalty() const { return penalty_; }

  OcpSolution solve(const Vector &x0, int horizon, const ControlSequence *warm_start = nullptr);
  bool cached(const Vector &x0, int horizon) const;
  /// Number of actual solver invocations (cache hits excluded).
  long solver_calls() const;
  void clear();

  double stage_cost(const Vector &x, const Vector &u) const {
    return penalized_stage_cost(model(), x, u, penalty_);
  }

private:
  static std::string key(const Vector &x0, int horizon);

  const OcpSolver &solver_;
  double penalty_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, OcpSolution> cache_;
  long calls_ = 0;
};

} // namespace ampc

#endif // AMPC_OCP_HPP
