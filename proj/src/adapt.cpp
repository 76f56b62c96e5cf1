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

#include "ampc/adapt.hpp"

#include <sstream>

namespace ampc {

void AdaptationConfig::validate() const {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0))
    throw std::invalid_argument("AdaptationConfig: alpha_bar must lie in (0, 1)");
  if (n_min < 2) throw std::invalid_argument("AdaptationConfig: n_min must be >= 2");
  if (n_max < n_min) throw std::invalid_argument("AdaptationConfig: n_max < n_min");
  if (n0 < 2 || n_hat < 2) throw std::invalid_argument("AdaptationConfig: n0, n_hat must be >= 2");
  if (!(equilibrium_threshold >= 0.0))
    throw std::invalid_argument("AdaptationConfig: negative equilibrium threshold");
}

AlphaEvaluation evaluate_alpha(const Vector &x, int n, const AdaptationConfig &config,
                               SolveSession &session, const ControlSequence *warm_start) {
  AlphaEvaluation ev;
  ev.horizon = n;
  ev.solution = session.solve(x, n, warm_start);
  ev.stage_cost = ev.solution.stage_costs.front();
  if (!(ev.stage_cost > config.equilibrium_threshold)) {
    std::ostringstream msg;
    msg << "stage cost " << ev.stage_cost << " at or below the equilibrium threshold";
    throw EquilibriumReached(msg.str(), ev.stage_cost);
  }

  if (config.estimator == EstimatorKind::a_posteriori) {
    const ControlSequence warm = shift_controls(ev.solution.controls, 1, n);
    ev.successor = session.solve(ev.solution.trajectory[1], n, &warm);
    ev.report.kind = EstimatorKind::a_posteriori;
    ev.report.alpha = a_posteriori_alpha(ev.solution.value, ev.successor->value, ev.stage_cost,
                                         config.equilibrium_threshold);
    ev.report.valid = true;
  } else if (n < config.n0) {
    // The a priori machinery needs N >= N0; treat as not attained.
    ev.report.kind = EstimatorKind::a_priori;
    ev.report.alpha = -kInfinity;
    ev.report.valid = false;
    ev.report.n0 = config.n0;
  } else {
    GammaFit fit = gamma_fit(ev.solution, config.n0, session, std::nullopt,
                             config.equilibrium_threshold);
    ev.report = a_priori_alpha(fit.gamma, n, config.n0);
    ev.report.components = std::move(fit.components);
  }
  return ev;
}

ShorteningResult shorten_certified(const AlphaEvaluation &evaluation,
                                   const AdaptationConfig &config, SolveSession &session) {
  const OcpSolution &sol = evaluation.solution;
  const int N = sol.horizon();
  const auto &xs = sol.trajectory;
  const auto &us = sol.controls;
  ShorteningResult result;

  // k = 0 is the relaxed Lyapunov inequality of the current step itself.
  {
    const ControlSequence warm = shift_controls(us, 1, N);
    const double v_next = evaluation.successor ? evaluation.successor->value
                                               : session.solve(xs[1], N, &warm).value;
    if (sol.value - v_next < config.alpha_bar * sol.stage_costs[0]) return result;
  }

  std::vector<ShorteningResult::Certificate> certs;
  int span = 0;
  for (int k = 1; k < N - config.n_min; ++k) {
    const int m = N - k;
    const ControlSequence warm_now = shift_controls(us, k, m);
    const ControlSequence warm_next = shift_controls(us, k + 1, m);
    const OcpSolution now = session.solve(xs[k], m, &warm_now);
    const OcpSolution next = session.solve(xs[k + 1], m, &warm_next);
    if (now.value - next.value < config.alpha_bar * sol.stage_costs[k]) break;
    certs.push_back({now.value, next.value, now.controls, next.controls});
    span = k;
  }

  result.span = span;
  for (int k = 1; k < span; ++k) {
    result.tail.push_back(us[k]);
    result.certificates.push_back(certs[k - 1]);
  }
  return result;
}

ShorteningResult shorten_apriori(const OcpSolution &solution, const AdaptationConfig &config,
                                 SolveSession &session) {
  const int N = solution.horizon();
  ShorteningResult result;
  const int limit = std::min(N - config.n0 - 1, N - config.n_min);
  if (limit <= 0) return result;

  const GammaFit fit =
      gamma_fit(solution, config.n0, session, config.n_hat, config.equilibrium_threshold);
  int span = -1;
  for (int k = 0; k < limit; ++k) {
    double gamma = 0.0;
    for (const auto &c : fit.components)
      if (c.kind == 'a' || c.k <= N - k) gamma = std::max(gamma, c.value);
    const double bound = gamma_bar(config.alpha_bar, N - k, config.n0);
    if (!(gamma < bound || gamma == 0.0)) break;
    span = k;
  }
  result.span = std::max(span, 0);
  for (int k = 1; k < result.span; ++k) result.tail.push_back(solution.controls[k]);
  return result;
}

ProlongationResult prolong(const Vector &x, int n_from, const AdaptationConfig &config,
                           SolveSession &session, const ControlSequence *warm_start) {
  if (n_from >= config.n_max) {
    std::ostringstream msg;
    msg << "prolong: already at the horizon cap " << config.n_max;
    throw HorizonCapReached(msg.str(), config.n_max, -kInfinity);
  }
  const long calls_before = session.solver_calls();
  std::optional<ControlSequence> warm;
  if (warm_start) warm = *warm_start;
  double best = -kInfinity;
  for (int n = n_from + 1; n <= config.n_max; ++n) {
    if (warm) warm = shift_controls(*warm, 0, n);
    AlphaEvaluation ev = evaluate_alpha(x, n, config, session, warm ? &*warm : nullptr);
    best = std::max(best, ev.alpha());
    if (ev.alpha() >= config.alpha_bar) {
      ProlongationResult r;
      r.horizon = n;
      r.solves_performed = static_cast<int>(session.solver_calls() - calls_before);
      r.evaluation = std::move(ev);
      return r;
    }
    warm = ev.solution.controls;
  }
  std::ostringstream msg;
  msg << "no horizon up to " << config.n_max << " reaches alpha_bar = " << config.alpha_bar
      << " (best alpha " << best << ")";
  throw HorizonCapReached(msg.str(), config.n_max, best);
}

AdaptationPlan adapt_step(const Vector &x, int n_start, const AdaptationConfig &config,
                          SolveSession &session, const ControlSequence *warm_start) {
  if (n_start < config.n_min || n_start > config.n_max)
    throw std::invalid_argument("adapt_step: n_start outside [n_min, n_max]");
  const long calls_before = session.solver_calls();

  AlphaEvaluation ev = evaluate_alpha(x, n_start, config, session, warm_start);
  if (ev.alpha() < config.alpha_bar) {
    if (n_start >= config.n_max) {
      std::ostringstream msg;
      msg << "alpha(" << n_start << ") = " << ev.alpha() << " < alpha_bar = " << config.alpha_bar
          << " at the horizon cap";
      throw HorizonCapReached(msg.str(), config.n_max, ev.alpha());
    }
    ProlongationResult pr = prolong(x, n_start, config, session, &ev.solution.controls);
    ev = std::move(pr.evaluation);
  }

  AdaptationPlan plan;
  plan.chosen_horizon = ev.horizon;
  plan.applied_control = ev.solution.controls.front();
  plan.alpha_achieved = ev.alpha();

  if (config.shortening == ShorteningMode::certified) {
    ShorteningResult sr = config.estimator == EstimatorKind::a_posteriori
                              ? shorten_certified(ev, config, session)
                              : shorten_apriori(ev.solution, config, session);
    plan.certified_span = sr.span;
    plan.reusable_tail = std::move(sr.tail);
    plan.certificates = std::move(sr.certificates);
  }
  // The free step plus the reused tail advance the loop by max(span, 1) steps.
  const int consumed = std::max(plan.certified_span, 1);
  plan.next_horizon = std::clamp(plan.chosen_horizon - consumed, config.n_min, config.n_max);
  plan.evaluation = std::move(ev);
  plan.solves_performed = static_cast<int>(session.solver_calls() - calls_before);
  return plan;
}

} // namespace ampc
