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

#include "ampc/estimate.hpp"

#include <cmath>
#include <sstream>

namespace ampc {

double a_posteriori_alpha(double v_now, double v_next, double stage_cost, double threshold) {
  if (!(stage_cost > threshold)) {
    std::ostringstream msg;
    msg << "a_posteriori_alpha: stage cost " << stage_cost << " at equilibrium";
    throw EquilibriumReached(msg.str(), stage_cost);
  }
  return (v_now - v_next) / stage_cost;
}

namespace {

void require_nonequilibrium(double cost, double threshold, const char *where) {
  if (!(cost > threshold)) {
    std::ostringstream msg;
    msg << "gamma_fit: stage cost " << cost << " below threshold in " << where;
    throw EquilibriumReached(msg.str(), cost);
  }
}

} // namespace

GammaFit gamma_fit(const OcpSolution &solution, int n0, SolveSession &session,
                   std::optional<int> n_hat_opt, double threshold) {
  const int N = solution.horizon();
  const int n_hat = n_hat_opt.value_or(n0);
  if (n0 < 2 || n0 > N || n_hat < 2 || n_hat > N)
    throw std::invalid_argument("gamma_fit: requires 2 <= n0, n_hat <= N");

  const auto &xs = solution.trajectory;
  GammaFit fit;
  try {
    // V_{n0} at x(N - n_hat) against the largest stage cost of mu_{j-1} at x(N - j).
    double denom = 0.0;
    for (int j = 2; j <= n_hat; ++j) {
      const Vector &y = xs[N - j];
      const ControlSequence warm = shift_controls(solution.controls, N - j, j - 1);
      const OcpSolution aux = session.solve(y, j - 1, &warm);
      denom = std::max(denom, session.stage_cost(y, aux.controls.front()));
    }
    require_nonequilibrium(denom, threshold, "V_n0 term");
    {
      const ControlSequence warm = shift_controls(solution.controls, N - n_hat, n0);
      const double v = session.solve(xs[N - n_hat], n0, &warm).value;
      fit.components.push_back({'a', n0, v / denom - 1.0});
    }
    for (int k = n_hat + 1; k <= N; ++k) {
      const Vector &y = xs[N - k];
      const ControlSequence warm = shift_controls(solution.controls, N - k, k);
      const OcpSolution aux = session.solve(y, k, &warm);
      const double l = session.stage_cost(y, aux.controls.front());
      require_nonequilibrium(l, threshold, "V_k term");
      fit.components.push_back({'b', k, aux.value / l - 1.0});
    }
  } catch (const NonFiniteObjective &e) {
    throw SolverFailure(std::string("gamma_fit: auxiliary solve failed: ") + e.what());
  }

  fit.gamma = 0.0;
  for (const auto &c : fit.components) fit.gamma = std::max(fit.gamma, c.value);
  return fit;
}

SuboptimalityReport a_priori_alpha(double gamma, int n, int n0) {
  if (n0 < 2 || n < n0) throw std::invalid_argument("a_priori_alpha: requires n >= n0 >= 2");
  if (!(gamma >= 0.0)) throw std::invalid_argument("a_priori_alpha: gamma must be >= 0");
  SuboptimalityReport r;
  r.kind = EstimatorKind::a_priori;
  r.gamma = gamma;
  r.n0 = n0;
  const int m = n - n0;
  if (gamma == 0.0) {
    r.alpha = 1.0;
    r.valid = true;
    return r;
  }
  const double grown = std::pow(gamma + 1.0, m);
  const double power = std::pow(gamma, m + 2);
  if (std::isfinite(grown) && std::isfinite(power)) {
    r.alpha = (grown - power) / grown;
    r.valid = grown > power;
  } else {
    // log-domain: alpha = 1 - exp((m+2) ln g - m ln(g+1))
    const double log_ratio = (m + 2) * std::log(gamma) - m * std::log1p(gamma);
    r.alpha = -std::expm1(log_ratio);
    r.valid = log_ratio < 0.0;
  }
  return r;
}

double gamma_bar(double alpha_bar, int n, int n0) {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0))
    throw std::invalid_argument("gamma_bar: alpha_bar must lie in (0, 1)");
  if (a_priori_alpha(0.0, n, n0).alpha < alpha_bar)
    throw NoFeasibleGamma("gamma_bar: even gamma = 0 misses alpha_bar");
  double lo = 0.0, hi = 1.0;
  while (a_priori_alpha(hi, n, n0).alpha >= alpha_bar) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (a_priori_alpha(mid, n, n0).alpha >= alpha_bar)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

} // namespace ampc
