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

#ifndef AMPC_MODEL_HPP
#define AMPC_MODEL_HPP

#include "ampc/types.hpp"

#include <functional>
#include <memory>
#include <string>

namespace ampc {

/// Continuous-time plant sampled with zero-order-hold controls.
///
/// The vector field writes dx/dt into its third argument; the cost integrand
/// is accumulated alongside the state so that the stage cost shares the
/// integrator's error control.
struct SampledOde {
  using VectorField = std::function<void(const Vector &x, const Vector &u, Vector &dxdt)>;
  using CostIntegrand = std::function<double(const Vector &x, const Vector &u)>;

  VectorField vector_field;
  CostIntegrand cost_integrand;
  double sampling_period = 0.2;
  double integrator_tolerance = 1e-9;

  void validate() const;
};

/// Result of one sampling interval: successor state and the stage cost.
struct Transition {
  Vector next_state;
  double cost = 0.0;
};

/// Accepted step sizes of one adaptive integration. Replaying an integration
/// on a frozen grid makes the transition a smooth function of (x, u), which
/// finite-difference gradients rely on.
struct StepGrid {
  std::vector<double> steps;
};

/// Integrates the ODE and its cost integrand over one sampling period with
/// the Dormand-Prince 5(4) pair. Throws IntegrationFailure on step underflow
/// or non-finite values. If `grid` is non-null the accepted steps are stored.
Transition integrate_zoh(const SampledOde &ode, const Vector &x, const Vector &u,
                         StepGrid *grid = nullptr);

/// Re-runs the 5th-order stages on a previously accepted grid, without error
/// control. On the grid produced for the same (x, u) the result is bit-identical
/// to integrate_zoh.
Transition replay_zoh(const SampledOde &ode, const Vector &x, const Vector &u,
                      const StepGrid &grid);

enum class ModelKind { explicit_discrete, sampled_continuous };

/// Discrete-time control system x+ = f(x, u) with stage cost l(x, u) >= 0 and
/// box constraints on states and controls. Immutable after construction.
class SystemModel {
public:
  using DiscreteMap = std::function<Vector(const Vector &x, const Vector &u)>;
  using StageCost = std::function<double(const Vector &x, const Vector &u)>;

  static SystemModel discrete(std::string name, int state_dim, int control_dim,
                              DiscreteMap dynamics, StageCost stage_cost,
                              Box state_bounds, Box control_bounds);
  static SystemModel sampled(std::string name, int state_dim, int control_dim,
                             SampledOde ode, Box state_bounds, Box control_bounds);

  const std::string &name() const { return name_; }
  ModelKind kind() const { return kind_; }
  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }
  const Box &state_bounds() const { return state_bounds_; }
  const Box &control_bounds() const { return control_bounds_; }
  /// Sampling period for sampled models, 1 for explicit ones.
  double sampling_period() const;
  const SampledOde *ode() const { return kind_ == ModelKind::sampled_continuous ? &ode_ : nullptr; }

  Transition transition(const Vector &x, const Vector &u, StepGrid *grid = nullptr) const;
  Transition replay(const Vector &x, const Vector &u, const StepGrid &grid) const;
  double stage_cost(const Vector &x, const Vector &u) const { return transition(x, u).cost; }

private:
  SystemModel() = default;

  std::string name_;
  ModelKind kind_ = ModelKind::explicit_discrete;
  int state_dim_ = 0;
  int control_dim_ = 0;
  DiscreteMap dynamics_;
  StageCost stage_cost_;
  SampledOde ode_;
  Box state_bounds_;
  Box control_bounds_;
};

/// f(x, u). Callers are expected to pass controls inside the control box.
Vector step(const SystemModel &model, const Vector &x, const Vector &u);

/// States x0, f(x0, u0), ... of length controls.size() + 1.
/// Step failures are rethrown as IntegrationFailure naming the failing index.
StateSequence rollout(const SystemModel &model, const Vector &x0,
                      const ControlSequence &controls);

} // namespace ampc

#endif // AMPC_MODEL_HPP
