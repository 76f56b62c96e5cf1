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

#include "ampc/model.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace ampc {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

// Augmented right-hand side: state derivative followed by the cost rate.
class AugmentedField {
public:
  AugmentedField(const SampledOde &ode, const Vector &u, int n)
      : ode_(ode), u_(u), n_(n), x_(n), dx_(n) {}

  void operator()(const Vector &y, Vector &dy) {
    x_ = y.head(n_);
    ode_.vector_field(x_, u_, dx_);
    dy.head(n_) = dx_;
    dy[n_] = ode_.cost_integrand(x_, u_);
  }

private:
  const SampledOde &ode_;
  const Vector &u_;
  int n_;
  Vector x_;
  Vector dx_;
};

struct Stages {
  explicit Stages(int m) {
    for (auto &k : k) k.resize(m);
    tmp.resize(m);
  }
  std::array<Vector, 7> k;
  Vector tmp;
};

// One Dormand-Prince step from y with k[0] = F(y) already evaluated.
// Writes the 5th-order solution to y_new and leaves F(y_new) in k[6].
void dopri_step(AugmentedField &field, Stages &s, const Vector &y, double h, Vector &y_new) {
  auto &k = s.k;
  s.tmp = y + h * (a21 * k[0]);
  field(s.tmp, k[1]);
  s.tmp = y + h * (a31 * k[0] + a32 * k[1]);
  field(s.tmp, k[2]);
  s.tmp = y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
  field(s.tmp, k[3]);
  s.tmp = y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
  field(s.tmp, k[4]);
  s.tmp = y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
  field(s.tmp, k[5]);
  y_new = y + h * (b1 * k[0] + b3 * k[2] + b4 * k[3] + b5 * k[4] + b6 * k[5]);
  field(y_new, k[6]);
}

Vector augment(const Vector &x) {
  Vector y(x.size() + 1);
  y.head(x.size()) = x;
  y[x.size()] = 0.0;
  return y;
}

Transition split(const Vector &y, int n) {
  return Transition{y.head(n), std::max(0.0, y[n])};
}

} // namespace

void SampledOde::validate() const {
  if (!vector_field || !cost_integrand)
    throw std::invalid_argument("SampledOde: vector field and cost integrand are required");
  if (!(sampling_period > 0.0))
    throw std::invalid_argument("SampledOde: sampling period must be positive");
  if (!(integrator_tolerance > 0.0))
    throw std::invalid_argument("SampledOde: integrator tolerance must be positive");
}

Transition integrate_zoh(const SampledOde &ode, const Vector &x, const Vector &u,
                         StepGrid *grid) {
  const int n = static_cast<int>(x.size());
  const double T = ode.sampling_period;
  const double tol = ode.integrator_tolerance;
  if (!x.allFinite() || !u.allFinite())
    throw IntegrationFailure("integrate_zoh: non-finite state or control");

  AugmentedField field(ode, u, n);
  Stages stages(n + 1);
  Vector y = augment(x);
  Vector y_new(n + 1);
  field(y, stages.k[0]);

  if (grid) grid->steps.clear();
  double t = 0.0;
  double h = T / 8.0;
  const double h_min = 1e-12 * T;
  constexpr int kMaxSteps = 100000;

  for (int count = 0; t < T; ++count) {
    if (count >= kMaxSteps) throw IntegrationFailure("integrate_zoh: too many steps");
    bool last = false;
    if (t + h >= T * (1.0 - 1e-12)) {
      h = T - t;
      last = true;
    }
    dopri_step(field, stages, y, h, y_new);

    const auto &k = stages.k;
    double err = 0.0;
    bool finite = y_new.allFinite() && k[6].allFinite();
    if (finite) {
      for (int i = 0; i <= n; ++i) {
        const double e =
            h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] +
                 e7 * k[6][i]);
        const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err = std::max(err, std::abs(e) / sc);
      }
      finite = std::isfinite(err);
    }

    if (finite && err <= 1.0) {
      if (grid) grid->steps.push_back(h);
      t = last ? T : t + h;
      y.swap(y_new);
      stages.k[0] = stages.k[6];
      const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(fac, 0.2, 5.0);
    } else {
      const double fac = finite ? 0.9 * std::pow(err, -0.2) : 0.2;
      h *= std::clamp(fac, 0.2, 1.0);
      if (h < h_min) {
        std::ostringstream msg;
        msg << "integrate_zoh: step size underflow at t=" << t;
        throw IntegrationFailure(msg.str());
      }
    }
  }
  return split(y, n);
}

Transition replay_zoh(const SampledOde &ode, const Vector &x, const Vector &u,
                      const StepGrid &grid) {
  const int n = static_cast<int>(x.size());
  AugmentedField field(ode, u, n);
  Stages stages(n + 1);
  Vector y = augment(x);
  Vector y_new(n + 1);
  field(y, stages.k[0]);
  for (double h : grid.steps) {
    dopri_step(field, stages, y, h, y_new);
    y.swap(y_new);
    stages.k[0] = stages.k[6];
  }
  return split(y, n);
}

SystemModel SystemModel::discrete(std::string name, int state_dim, int control_dim,
                                  DiscreteMap dynamics, StageCost stage_cost,
                                  Box state_bounds, Box control_bounds) {
  if (state_dim < 1 || control_dim < 1)
    throw std::invalid_argument("SystemModel: dimensions must be >= 1");
  if (!dynamics || !stage_cost)
    throw std::invalid_argument("SystemModel: dynamics and stage cost are required");
  SystemModel m;
  m.name_ = std::move(name);
  m.kind_ = ModelKind::explicit_discrete;
  m.state_dim_ = state_dim;
  m.control_dim_ = control_dim;
  m.dynamics_ = std::move(dynamics);
  m.stage_cost_ = std::move(stage_cost);
  m.state_bounds_ = std::move(state_bounds);
  m.control_bounds_ = std::move(control_bounds);
  if (m.state_bounds_.dim() != state_dim || m.control_bounds_.dim() != control_dim)
    throw std::invalid_argument("SystemModel: bound dimensions do not match");
  for (const auto &iv : m.control_bounds_.intervals())
    if (iv.empty()) throw std::invalid_argument("SystemModel: empty control interval");
  return m;
}

SystemModel SystemModel::sampled(std::string name, int state_dim, int control_dim,
                                 SampledOde ode, Box state_bounds, Box control_bounds) {
  ode.validate();
  SystemModel m = discrete(
      std::move(name), state_dim, control_dim, [](const Vector &x, const Vector &) { return x; },
      [](const Vector &, const Vector &) { return 0.0; }, std::move(state_bounds),
      std::move(control_bounds));
  m.kind_ = ModelKind::sampled_continuous;
  m.dynamics_ = nullptr;
  m.stage_cost_ = nullptr;
  m.ode_ = std::move(ode);
  return m;
}

double SystemModel::sampling_period() const {
  return kind_ == ModelKind::sampled_continuous ? ode_.sampling_period : 1.0;
}

Transition SystemModel::transition(const Vector &x, const Vector &u, StepGrid *grid) const {
  if (kind_ == ModelKind::sampled_continuous) return integrate_zoh(ode_, x, u, grid);
  if (grid) grid->steps.clear();
  return Transition{dynamics_(x, u), stage_cost_(x, u)};
}

Transition SystemModel::replay(const Vector &x, const Vector &u, const StepGrid &grid) const {
  if (kind_ == ModelKind::sampled_continuous) return replay_zoh(ode_, x, u, grid);
  return Transition{dynamics_(x, u), stage_cost_(x, u)};
}

Vector step(const SystemModel &model, const Vector &x, const Vector &u) {
  return model.transition(x, u).next_state;
}

StateSequence rollout(const SystemModel &model, const Vector &x0,
                      const ControlSequence &controls) {
  if (controls.empty()) throw std::invalid_argument("rollout: empty control sequence");
  StateSequence states;
  states.reserve(controls.size() + 1);
  states.push_back(x0);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    try {
      states.push_back(step(model, states.back(), controls[k]));
    } catch (const IntegrationFailure &e) {
      std::ostringstream msg;
      msg << "rollout: step " << k << " failed: " << e.what();
      throw IntegrationFailure(msg.str());
    }
  }
  return states;
}

} // namespace ampc
