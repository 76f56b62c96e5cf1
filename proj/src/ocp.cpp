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

#include "ampc/ocp.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace ampc {

double penalized_stage_cost(const SystemModel &model, const Vector &x, double model_cost,
                            double rho) {
  if (rho == 0.0) return model_cost;
  return model_cost + rho * model.state_bounds().squared_distance(x);
}

double penalized_stage_cost(const SystemModel &model, const Vector &x, const Vector &u,
                            double rho) {
  return penalized_stage_cost(model, x, model.stage_cost(x, u), rho);
}

struct OcpSolver::Evaluation {
  StateSequence states;
  std::vector<double> stage_costs;
  std::vector<StepGrid> grids;
  double value = kInfinity;
};

namespace {

ControlSequence unflatten(const Vector &z, int horizon, int m) {
  ControlSequence u(horizon);
  for (int k = 0; k < horizon; ++k) u[k] = z.segment(k * m, m);
  return u;
}

Vector flatten(const ControlSequence &u, int m) {
  Vector z(static_cast<Eigen::Index>(u.size()) * m);
  for (std::size_t k = 0; k < u.size(); ++k) z.segment(k * m, m) = u[k];
  return z;
}

} // namespace

OcpSolver::OcpSolver(std::shared_ptr<const SystemModel> model, SolverOptions options)
    : model_(std::move(model)), options_(options) {
  if (!model_) throw std::invalid_argument("OcpSolver: null model");
  if (!(options_.tolerance > 0.0) || !(options_.fd_step > 0.0) || options_.max_iterations < 0)
    throw std::invalid_argument("OcpSolver: invalid solver options");
}

OcpSolver::Evaluation OcpSolver::evaluate(const Vector &x0, const Vector &z, int horizon,
                                          double rho) const {
  const int m = model_->control_dim();
  Evaluation ev;
  ev.states.reserve(horizon + 1);
  ev.states.push_back(x0);
  ev.stage_costs.reserve(horizon);
  ev.grids.resize(horizon);
  double total = 0.0;
  try {
    for (int k = 0; k < horizon; ++k) {
      const Vector u = z.segment(k * m, m);
      Transition tr = model_->transition(ev.states[k], u, &ev.grids[k]);
      const double c = penalized_stage_cost(*model_, ev.states[k], tr.cost, rho);
      ev.stage_costs.push_back(c);
      total += c;
      ev.states.push_back(std::move(tr.next_state));
    }
  } catch (const IntegrationFailure &) {
    ev.value = kInfinity;
    return ev;
  }
  ev.value = std::isfinite(total) ? total : kInfinity;
  return ev;
}

Vector OcpSolver::gradient_at(const Evaluation &ev, const Vector &z, double rho) const {
  const int m = model_->control_dim();
  const int horizon = static_cast<int>(ev.stage_costs.size());
  std::vector<double> prefix(horizon + 1, 0.0);
  for (int k = 0; k < horizon; ++k) prefix[k + 1] = prefix[k] + ev.stage_costs[k];

  // Cost of stages k..N-1 with control k perturbed, replayed on the frozen grids.
  auto tail_cost = [&](int k, const Vector &uk, double &out) {
    try {
      Vector x = ev.states[k];
      double total = 0.0;
      for (int j = k; j < horizon; ++j) {
        const Vector u = j == k ? uk : Vector(z.segment(j * m, m));
        Transition tr = model_->replay(x, u, ev.grids[j]);
        total += penalized_stage_cost(*model_, x, tr.cost, rho);
        x = std::move(tr.next_state);
      }
      out = total;
      return std::isfinite(total);
    } catch (const IntegrationFailure &) {
      return false;
    }
  };

  Vector g(z.size());
  for (int k = 0; k < horizon; ++k) {
    const double base = ev.value - prefix[k];
    for (int c = 0; c < m; ++c) {
      const int j = k * m + c;
      const double h = options_.fd_step * std::max(1.0, std::abs(z[j]));
      Vector up = z.segment(k * m, m), dn = up;
      up[c] += h;
      dn[c] -= h;
      double fp = 0.0, fm = 0.0;
      const bool ok_p = tail_cost(k, up, fp);
      const bool ok_m = tail_cost(k, dn, fm);
      if (ok_p && ok_m)
        g[j] = (fp - fm) / (2.0 * h);
      else if (ok_p)
        g[j] = (fp - base) / h;
      else if (ok_m)
        g[j] = (base - fm) / h;
      else
        throw SolverFailure("OcpSolver: gradient undefined, dynamics fail on both sides");
    }
  }
  return g;
}

double OcpSolver::objective(const Vector &x0, const ControlSequence &controls, double rho) const {
  return evaluate(x0, flatten(controls, model_->control_dim()), static_cast<int>(controls.size()),
                  rho)
      .value;
}

Vector OcpSolver::gradient(const Vector &x0, const ControlSequence &controls, double rho) const {
  const Vector z = flatten(controls, model_->control_dim());
  const Evaluation ev = evaluate(x0, z, static_cast<int>(controls.size()), rho);
  if (!std::isfinite(ev.value)) throw NonFiniteObjective("OcpSolver::gradient: objective not finite");
  return gradient_at(ev, z, rho);
}

OcpSolution OcpSolver::solve(const OcpInstance &inst) const {
  ++*solve_count_;
  const SystemModel &model = *model_;
  const int m = model.control_dim();
  const int N = inst.horizon;
  if (N < 1) throw std::invalid_argument("OcpSolver::solve: horizon must be >= 1");
  if (inst.x0.size() != model.state_dim() || !inst.x0.allFinite())
    throw std::invalid_argument("OcpSolver::solve: x0 has wrong size or is not finite");
  if (!(inst.state_penalty_weight >= 0.0))
    throw std::invalid_argument("OcpSolver::solve: penalty weight must be nonnegative");

  // Box of the flattened decision vector.
  const int dim = N * m;
  Vector lo(dim), hi(dim);
  for (int k = 0; k < N; ++k)
    for (int c = 0; c < m; ++c) {
      lo[k * m + c] = model.control_bounds()[c].lower;
      hi[k * m + c] = model.control_bounds()[c].upper;
    }
  auto project = [&](const Vector &v) { return v.cwiseMax(lo).cwiseMin(hi); };

  Vector z(dim);
  if (inst.warm_start) {
    if (static_cast<int>(inst.warm_start->size()) != N)
      throw std::invalid_argument("OcpSolver::solve: warm start length differs from horizon");
    for (const auto &u : *inst.warm_start)
      if (u.size() != m) throw std::invalid_argument("OcpSolver::solve: warm start control size");
    z = project(flatten(*inst.warm_start, m));
  } else {
    z = project(Vector::Zero(dim));
  }

  const double rho = inst.state_penalty_weight;
  Evaluation ev = evaluate(inst.x0, z, N, rho);
  if (!std::isfinite(ev.value))
    throw NonFiniteObjective("OcpSolver::solve: objective not finite at the initial controls");
  Vector g = gradient_at(ev, z, rho);

  Matrix H = Matrix::Identity(dim, dim);
  bool h_is_identity = true;
  OcpSolution sol;
  sol.status = SolveStatus::max_iterations;
  int it = 0;
  double residual = 0.0;

  for (;; ++it) {
    const Vector pg = z - project(z - g);
    const double raw = pg.lpNorm<Eigen::Infinity>();
    residual = raw / std::max(1.0, std::abs(ev.value));
    if (residual <= options_.tolerance) {
      sol.status = SolveStatus::converged;
      break;
    }
    if (it >= options_.max_iterations) {
      sol.status = SolveStatus::max_iterations;
      break;
    }

    // Variables held at a bound whose gradient points outward.
    const double eps = std::min(1e-3, raw);
    std::vector<bool> active(dim, false);
    for (int j = 0; j < dim; ++j)
      active[j] = (z[j] - lo[j] <= eps && g[j] > 0.0) || (hi[j] - z[j] <= eps && g[j] < 0.0);

    Vector d(dim);
    for (int i = 0; i < dim; ++i) {
      if (active[i]) {
        d[i] = -H(i, i) * g[i];
        continue;
      }
      double acc = 0.0;
      for (int j = 0; j < dim; ++j)
        if (!active[j]) acc += H(i, j) * g[j];
      d[i] = -acc;
    }
    if (!(g.dot(d) < 0.0)) {
      H.setIdentity();
      h_is_identity = true;
      d = -g;
    }

    // Armijo backtracking along the projection arc.
    double t = 1.0;
    bool accepted = false;
    Vector z_new;
    Evaluation ev_new;
    for (int bt = 0; bt < options_.max_backtracks; ++bt, t *= 0.5) {
      z_new = project(z + t * d);
      const double decrease = g.dot(z_new - z);
      if (decrease >= 0.0) continue;
      ev_new = evaluate(inst.x0, z_new, N, rho);
      if (std::isfinite(ev_new.value) &&
          ev_new.value <= ev.value + options_.armijo * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!h_is_identity) {
        H.setIdentity();
        h_is_identity = true;
        continue;
      }
      sol.status = SolveStatus::stalled;
      break;
    }

    Vector g_new = gradient_at(ev_new, z_new, rho);
    const Vector s = z_new - z;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (h_is_identity) H *= sy / y.squaredNorm();
      const double r = 1.0 / sy;
      const Vector Hy = H * y;
      // Inverse BFGS update.
      H += (r * r * y.dot(Hy) + r) * (s * s.transpose()) - r * (Hy * s.transpose() + s * Hy.transpose());
      h_is_identity = false;
    }
    z = std::move(z_new);
    ev = std::move(ev_new);
    g = std::move(g_new);
  }

  sol.controls = unflatten(z, N, m);
  sol.trajectory = std::move(ev.states);
  sol.stage_costs = std::move(ev.stage_costs);
  sol.value = ev.value;
  sol.converged = sol.status == SolveStatus::converged;
  sol.iterations = it;
  sol.first_order_residual = residual;
  return sol;
}

ControlSequence shift_controls(const ControlSequence &controls, int shift, int horizon) {
  if (controls.empty()) throw std::invalid_argument("shift_controls: empty sequence");
  ControlSequence out;
  out.reserve(horizon);
  for (int k = 0; k < horizon; ++k) {
    const std::size_t idx = std::min<std::size_t>(shift + k, controls.size() - 1);
    out.push_back(controls[idx]);
  }
  return out;
}

SolveSession::SolveSession(const OcpSolver &solver, double state_penalty_weight)
    : solver_(solver), penalty_(state_penalty_weight) {}

std::string SolveSession::key(const Vector &x0, int horizon) {
  std::string k(sizeof(int) + sizeof(double) * x0.size(), '\0');
  std::memcpy(k.data(), &horizon, sizeof(int));
  std::memcpy(k.data() + sizeof(int), x0.data(), sizeof(double) * x0.size());
  return k;
}

OcpSolution SolveSession::solve(const Vector &x0, int horizon, const ControlSequence *warm_start) {
  const std::string k = key(x0, horizon);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(k); it != cache_.end()) return it->second;
  }
  OcpInstance inst;
  inst.x0 = x0;
  inst.horizon = horizon;
  inst.state_penalty_weight = penalty_;
  if (warm_start) inst.warm_start = shift_controls(*warm_start, 0, horizon);
  OcpSolution sol = solver_.solve(inst);
  std::lock_guard<std::mutex> lock(mutex_);
  ++calls_;
  return cache_.emplace(k, std::move(sol)).first->second;
}

bool SolveSession::cached(const Vector &x0, int horizon) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.count(key(x0, horizon)) > 0;
}

long SolveSession::solver_calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return calls_;
}

void SolveSession::clear() {
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.clear();
}

} // namespace ampc
