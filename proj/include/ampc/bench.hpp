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

#ifndef AMPC_BENCH_HPP
#define AMPC_BENCH_HPP

#include "ampc/model.hpp"

#include <memory>

namespace ampc {

/// Overhead crane with a variable-length rope modelled as a damped pendulum.
/// State (chi, chi', upsilon, upsilon', phi, phi'): crab position, rope
/// length, deflection angle and their rates. Controls: crab and rope-length
/// accelerations.
struct CraneParameters {
  double g = 9.81;
  double k = 0.1;
  double c1 = 0.25, c2 = 0.5, c3 = 40.0, c4 = 20.0, c5 = 20.0, c6 = 20.0, c7 = 0.1;
  double chi_target = 3.0;
  double upsilon_target = 2.0;
  double sampling_period = 0.2;
  double integrator_tolerance = 1e-9;
};

SampledOde crane_ode(const CraneParameters &params = {});
Box crane_state_bounds();
Box crane_control_bounds();
std::shared_ptr<const SystemModel> crane_model(const CraneParameters &params = {});
Vector crane_rest_state(const CraneParameters &params = {});
/// Transport start: chi = -3, upsilon = 5, all rates zero.
Vector crane_initial_state();
/// 0.5 upsilon^2 phi'^2 + g upsilon (1 - cos phi).
double pendulum_energy(const Vector &state, double g = 9.81);

/// x+ = A x + B u with stage cost x'Qx + u'Ru, unconstrained.
struct LqSystem {
  Matrix A, B, Q, R;

  static LqSystem scalar(double a, double b, double q, double r);
  int state_dim() const { return static_cast<int>(A.rows()); }
  int control_dim() const { return static_cast<int>(B.cols()); }
  void validate() const;
};

std::shared_ptr<const SystemModel> lq_model(const LqSystem &lq);

/// P_n of the finite-horizon recursion without terminal cost (P_1 = Q).
/// Throws SingularInnovation if R + B'P B is singular.
Matrix riccati_matrix(const LqSystem &lq, int n);
/// V_n(x) = x' P_n x.
double riccati_value(const LqSystem &lq, int n, const Vector &x);
/// Optimal first-stage feedback u = -K x for a remaining horizon n >= 1.
Matrix riccati_gain(const LqSystem &lq, int n);

/// Explicit-discrete system with a finite control alphabet, ordered
/// lexicographically.
struct FiniteControlSystem {
  std::shared_ptr<const SystemModel> model;
  std::vector<Vector> controls;

  FiniteControlSystem(std::shared_ptr<const SystemModel> model, std::vector<Vector> controls);
};

struct DpResult {
  double value = 0.0;
  ControlSequence controls;
  long leaves = 0;
};

/// Scalar nonlinear benchmark x+ = x + 0.1 sin(x) + u, l = x^2 + u^2, with
/// `levels` equally spaced controls in [-1, 1]. The model's control box is
/// the hull of the alphabet.
FiniteControlSystem finite_benchmark_system(int levels = 11);

/// Exact minimum of the n-stage cost over all control sequences by exhaustive
/// search. Ties go to the lexicographically smallest sequence.
DpResult dp_enumerate(const FiniteControlSystem &system, const Vector &x0, int n,
                      long max_leaves = 1'000'000);

} // namespace ampc

#endif // AMPC_BENCH_HPP
