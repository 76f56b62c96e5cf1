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

#ifndef AMPC_ESTIMATE_HPP
#define AMPC_ESTIMATE_HPP

#include "ampc/ocp.hpp"

#include <optional>

namespace ampc {

/// Stage costs below this level mark the equilibrium; estimation stops there.
inline constexpr double kEquilibriumThreshold = 1e-3;

enum class EstimatorKind { a_posteriori, a_priori };

/// One candidate of the gamma fit: kind 'a' is the V_{N0} term, kind 'b' the
/// term for horizon k.
struct GammaComponent {
  char kind = 'a';
  int k = 0;
  double value = 0.0;
};

struct SuboptimalityReport {
  double alpha = 0.0;
  EstimatorKind kind = EstimatorKind::a_posteriori;
  std::optional<double> gamma;
  std::optional<int> n0;
  bool valid = true;
  std::vector<GammaComponent> components;
};

/// Largest alpha with v_now >= v_next + alpha * stage_cost.
/// Throws EquilibriumReached if stage_cost <= threshold.
double a_posteriori_alpha(double v_now, double v_next, double stage_cost,
                          double threshold = kEquilibriumThreshold);

struct GammaFit {
  double gamma = 0.0;
  std::vector<GammaComponent> components;
};

/// Smallest gamma >= 0 for which the controllability-type inequalities hold
/// along the open-loop trajectory of `solution`. The V_{n0} term is taken at
/// the open-loop point N - n_hat with the stage-cost maximum over
/// j = 2..n_hat; terms for k = n_hat+1..N follow. Pass n_hat = n0 for the
/// plain a priori estimate. Auxiliary V_m and mu_m come from `session`,
/// warm-started from tails of the stored open-loop controls.
GammaFit gamma_fit(const OcpSolution &solution, int n0, SolveSession &session,
                   std::optional<int> n_hat = std::nullopt,
                   double threshold = kEquilibriumThreshold);

/// alpha = ((g+1)^(n-n0) - g^(n-n0+2)) / (g+1)^(n-n0).
/// Invalid parameter combinations are reported through `valid`, not thrown.
SuboptimalityReport a_priori_alpha(double gamma, int n, int n0);

/// Largest gamma with a_priori_alpha(gamma, n, n0).alpha >= alpha_bar.
double gamma_bar(double alpha_bar, int n, int n0);

} // namespace ampc

#endif // AMPC_ESTIMATE_HPP
