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

#include "ampc/bench.hpp"

#include <cmath>

namespace ampc {

SampledOde crane_ode(const CraneParameters &p) {
  SampledOde ode;
  ode.vector_field = [p](const Vector &x, const Vector &u, Vector &dx) {
    const double upsilon = x[2];
    if (!(upsilon > 0.0)) throw IntegrationFailure("crane: rope length must stay positive");
    dx[0] = x[1];
    dx[1] = u[0];
    dx[2] = x[3];
    dx[3] = u[1];
    dx[4] = x[5];
    dx[5] = -p.k * x[5] - (p.g / upsilon) * std::sin(x[4]) - u[0] * std::cos(x[4]);
  };
  ode.cost_integrand = [p](const Vector &x, const Vector &u) {
    const double chi = x[0], chi_dot = x[1], ups = x[2], ups_dot = x[3];
    const double phi = x[4], phi_dot = x[5];
    return p.c1 * phi_dot * phi_dot * ups * ups + p.c2 * p.g * ups * (1.0 - std::cos(phi)) +
           p.c3 * (chi - p.chi_target) * (chi - p.chi_target) + p.c4 * chi_dot * chi_dot +
           p.c5 * (ups - p.upsilon_target) * (ups - p.upsilon_target) +
           p.c6 * ups_dot * ups_dot + p.c7 * (u[0] * u[0] + u[1] * u[1]);
  };
  ode.sampling_period = p.sampling_period;
  ode.integrator_tolerance = p.integrator_tolerance;
  return ode;
}

Box crane_state_bounds() {
  return Box({{-5.0, 5.0}, {-5.0, 5.0}, {1.0, 4.0}, {-1.0, 2.0}, {-1.0, 1.0}, {}});
}

Box crane_control_bounds() { return Box({{-5.0, 5.0}, {-1.0, 2.0}}); }

std::shared_ptr<const SystemModel> crane_model(const CraneParameters &params) {
  return std::make_shared<const SystemModel>(SystemModel::sampled(
      "crane", 6, 2, crane_ode(params), crane_state_bounds(), crane_control_bounds()));
}

Vector crane_rest_state(const CraneParameters &params) {
  Vector x = Vector::Zero(6);
  x[0] = params.chi_target;
  x[2] = params.upsilon_target;
  return x;
}

Vector crane_initial_state() {
  Vector x = Vector::Zero(6);
  x[0] = -3.0;
  x[2] = 5.0;
  return x;
}

double pendulum_energy(const Vector &s, double g) {
  return 0.5 * s[2] * s[2] * s[5] * s[5] + g * s[2] * (1.0 - std::cos(s[4]));
}

LqSystem LqSystem::scalar(double a, double b, double q, double r) {
  LqSystem lq;
  lq.A = Matrix::Constant(1, 1, a);
  lq.B = Matrix::Constant(1, 1, b);
  lq.Q = Matrix::Constant(1, 1, q);
  lq.R = Matrix::Constant(1, 1, r);
  return lq;
}

void LqSystem::validate() const {
  const int n = state_dim(), m = control_dim();
  if (n < 1 || m < 1 || A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m)
    throw std::invalid_argument("LqSystem: inconsistent matrix dimensions");
  const Eigen::SelfAdjointEigenSolver<Matrix> qs(0.5 * (Q + Q.transpose()));
  if (qs.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("LqSystem: Q must be positive semidefinite");
  const Eigen::SelfAdjointEigenSolver<Matrix> rs(0.5 * (R + R.transpose()));
  if (!(rs.eigenvalues().minCoeff() > 0.0))
    throw std::invalid_argument("LqSystem: R must be positive definite");
}

std::shared_ptr<const SystemModel> lq_model(const LqSystem &lq) {
  lq.validate();
  const int n = lq.state_dim(), m = lq.control_dim();
  return std::make_shared<const SystemModel>(SystemModel::discrete(
      "lq", n, m, [lq](const Vector &x, const Vector &u) -> Vector { return lq.A * x + lq.B * u; },
      [lq](const Vector &x, const Vector &u) {
        return x.dot(lq.Q * x) + u.dot(lq.R * u);
      },
      Box::unbounded(n), Box::unbounded(m)));
}

namespace {

// (R + B'PB)^{-1} B'PA, the gain for the next stage given cost-to-go P.
Matrix gain_from(const LqSystem &lq, const Matrix &P) {
  const Matrix S = lq.R + lq.B.transpose() * P * lq.B;
  const Eigen::LDLT<Matrix> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array().abs() < 1e-14).any())
    throw SingularInnovation("riccati: R + B'PB is singular");
  return ldlt.solve(lq.B.transpose() * P * lq.A);
}

} // namespace

Matrix riccati_matrix(const LqSystem &lq, int n) {
  if (n < 1) throw std::invalid_argument("riccati_matrix: n must be >= 1");
  Matrix P = lq.Q;
  for (int m = 1; m < n; ++m) {
    const Matrix K = gain_from(lq, P);
    const Matrix AtPB = lq.A.transpose() * P * lq.B;
    P = lq.Q + lq.A.transpose() * P * lq.A - AtPB * K;
    P = 0.5 * (P + P.transpose());
  }
  return P;
}

double riccati_value(const LqSystem &lq, int n, const Vector &x) {
  return x.dot(riccati_matrix(lq, n) * x);
}

Matrix riccati_gain(const LqSystem &lq, int n) {
  if (n < 1) throw std::invalid_argument("riccati_gain: n must be >= 1");
  if (n == 1) return Matrix::Zero(lq.control_dim(), lq.state_dim());
  return gain_from(lq, riccati_matrix(lq, n - 1));
}

FiniteControlSystem::FiniteControlSystem(std::shared_ptr<const SystemModel> m,
                                         std::vector<Vector> c)
    : model(std::move(m)), controls(std::move(c)) {
  if (!model) throw std::invalid_argument("FiniteControlSystem: null model");
  if (controls.empty()) throw std::invalid_argument("FiniteControlSystem: empty control set");
  for (const auto &u : controls)
    if (u.size() != model->control_dim())
      throw std::invalid_argument("FiniteControlSystem: control dimension mismatch");
  std::sort(controls.begin(), controls.end(), [](const Vector &a, const Vector &b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  });
}

FiniteControlSystem finite_benchmark_system(int levels) {
  if (levels < 1) throw std::invalid_argument("finite_benchmark_system: levels must be >= 1");
  auto model = std::make_shared<const SystemModel>(SystemModel::discrete(
      "finite", 1, 1,
      [](const Vector &x, const Vector &u) -> Vector {
        return Vector::Constant(1, x[0] + 0.1 * std::sin(x[0]) + u[0]);
      },
      [](const Vector &x, const Vector &u) { return x[0] * x[0] + u[0] * u[0]; },
      Box::unbounded(1), Box({{-1.0, 1.0}})));
  std::vector<Vector> controls;
  for (int i = 0; i < levels; ++i)
    controls.push_back(
        Vector::Constant(1, levels == 1 ? 0.0 : -1.0 + 2.0 * i / (levels - 1)));
  return FiniteControlSystem(std::move(model), std::move(controls));
}

DpResult dp_enumerate(const FiniteControlSystem &sys, const Vector &x0, int n, long max_leaves) {
  if (n < 1) throw std::invalid_argument("dp_enumerate: n must be >= 1");
  const double branching = static_cast<double>(sys.controls.size());
  if (std::pow(branching, n) > static_cast<double>(max_leaves))
    throw EnumerationTooLarge("dp_enumerate: control set too large for exhaustive search");

  DpResult best;
  best.value = kInfinity;
  std::vector<int> path(n, 0);
  std::vector<int> best_path;

  // Depth-first in lexicographic order; strict improvement keeps the first
  // (smallest) sequence among ties.
  auto visit = [&](auto &&self, const Vector &x, int depth, double cost) -> void {
    if (depth == n) {
      ++best.leaves;
      if (cost < best.value) {
        best.value = cost;
        best_path = path;
      }
      return;
    }
    for (std::size_t c = 0; c < sys.controls.size(); ++c) {
      path[depth] = static_cast<int>(c);
      const Transition tr = sys.model->transition(x, sys.controls[c]);
      self(self, tr.next_state, depth + 1, cost + tr.cost);
    }
  };
  visit(visit, x0, 0, 0.0);

  for (int idx : best_path) best.controls.push_back(sys.controls[idx]);
  return best;
}

} // namespace ampc
