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

#ifndef AMPC_ADAPT_HPP
#define AMPC_ADAPT_HPP

#include "ampc/estimate.hpp"

namespace ampc {

enum class ShorteningMode { certified, heuristic_decrement };

struct AdaptationConfig {
  double alpha_bar = 0.5;
  int n_min = 2;
  int n_max = 20;
  /// Base horizon of the a priori estimate.
  int n0 = 2;
  /// Threshold horizon of the a priori shortening check.
  int n_hat = 2;
  EstimatorKind estimator = EstimatorKind::a_posteriori;
  ShorteningMode shortening = ShorteningMode::certified;
  double equilibrium_threshold = kEquilibriumThreshold;

  void validate() const;
};

/// Open-loop solve at one state and horizon with its suboptimality estimate.
struct AlphaEvaluation {
  int horizon = 0;
  OcpSolution solution;
  /// A posteriori only: the solve at f(x, u*(0)) with the same horizon.
  std::optional<OcpSolution> successor;
  double stage_cost = 0.0;
  SuboptimalityReport report;

  double alpha() const { return report.alpha; }
};

/// Solves at (x, n) and estimates alpha(n) with the configured estimator.
/// Throws EquilibriumReached if the stage cost of the first control is at or
/// below the equilibrium threshold.
AlphaEvaluation evaluate_alpha(const Vector &x, int n, const AdaptationConfig &config,
                               SolveSession &session, const ControlSequence *warm_start = nullptr);

/// Span ī of a shortening check. Steps i+1 .. i+ī-1 may apply `tail` without
/// re-optimizing, with horizons N-1 .. N-ī+1.
struct ShorteningResult {
  int span = 0;
  ControlSequence tail;
  /// Per reused offset k = 1..span-1: the certificate V_{N-k}(x*(k)),
  /// V_{N-k}(x*(k+1)) and the controls of the two solves. Empty for the
  /// a priori check.
  struct Certificate {
    double v_now = 0.0;
    double v_next = 0.0;
    ControlSequence open_loop;
    ControlSequence successor_open_loop;
  };
  std::vector<Certificate> certificates;
};

/// Relaxed Lyapunov decrease along the stored open loop, checked with
/// auxiliary solves of horizon N-k at the open-loop points. The right-hand
/// side uses the stage cost of the control that will actually be applied.
ShorteningResult shorten_certified(const AlphaEvaluation &evaluation,
                                   const AdaptationConfig &config, SolveSession &session);

/// A priori variant: the fitted gamma for the shortened horizon N-k has to
/// stay below gamma_bar(alpha_bar, N-k, n0).
ShorteningResult shorten_apriori(const OcpSolution &solution, const AdaptationConfig &config,
                                 SolveSession &session);

struct ProlongationResult {
  int horizon = 0;
  AlphaEvaluation evaluation;
  int solves_performed = 0;
};

/// Increases the horizon by one from n_from until alpha >= alpha_bar.
/// Throws HorizonCapReached if n_max is passed.
ProlongationResult prolong(const Vector &x, int n_from, const AdaptationConfig &config,
                           SolveSession &session, const ControlSequence *warm_start = nullptr);

struct AdaptationPlan {
  int chosen_horizon = 0;
  Vector applied_control;
  double alpha_achieved = 0.0;
  int certified_span = 0;
  ControlSequence reusable_tail;
  int solves_performed = 0;
  /// Starting horizon proposed for the next free step.
  int next_horizon = 0;
  AlphaEvaluation evaluation;
  std::vector<ShorteningResult::Certificate> certificates;
};

/// One adaptive step: estimate alpha at n_start, prolong if it misses
/// alpha_bar, then consult the shortening strategy.
AdaptationPlan adapt_step(const Vector &x, int n_start, const AdaptationConfig &config,
                          SolveSession &session, const ControlSequence *warm_start = nullptr);

} // namespace ampc

#endif // AMPC_ADAPT_HPP
