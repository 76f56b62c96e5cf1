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
#include "ampc/ocp.hpp"

#include <gtest/gtest.h>

namespace ampc {
namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

TEST(Riccati, ScalarSequence) {
  const LqSystem lq = LqSystem::scalar(1, 1, 1, 1);
  const double expected[] = {1.0,          1.5,        1.6,        1.6153846154, 1.6176470588,
                             1.6179775281, 1.61802575, 1.61803279, 1.618033813,  1.61803396};
  for (int n = 1; n <= 10; ++n)
    EXPECT_NEAR(riccati_matrix(lq, n)(0, 0), expected[n - 1], 1e-8) << n;
  EXPECT_NEAR(riccati_value(lq, 2, v1(2.0)), 6.0, 1e-12);
}

TEST(Riccati, Gains) {
  const LqSystem lq = LqSystem::scalar(1, 1, 1, 1);
  EXPECT_EQ(riccati_gain(lq, 1)(0, 0), 0.0);
  EXPECT_NEAR(riccati_gain(lq, 2)(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(riccati_gain(lq, 3)(0, 0), 0.6, 1e-12);
  EXPECT_THROW(riccati_gain(lq, 0), std::invalid_argument);
}

TEST(Riccati, SingularInnovation) {
  LqSystem lq = LqSystem::scalar(1, 0, 1, 0);
  EXPECT_THROW(riccati_matrix(lq, 2), SingularInnovation);
  EXPECT_THROW(lq.validate(), std::invalid_argument);
}

TEST(LqSystem, DimensionsChecked) {
  LqSystem lq = LqSystem::scalar(1, 1, 1, 1);
  lq.B = Matrix::Ones(2, 1);
  EXPECT_THROW(lq.validate(), std::invalid_argument);
  EXPECT_THROW(lq_model(lq), std::invalid_argument);
}

TEST(Crane, Defaults) {
  const Vector rest = crane_rest_state();
  EXPECT_EQ(rest[0], 3.0);
  EXPECT_EQ(rest[2], 2.0);
  const Vector x0 = crane_initial_state();
  EXPECT_EQ(x0[0], -3.0);
  EXPECT_EQ(x0[2], 5.0);
  EXPECT_FALSE(crane_state_bounds().contains(x0));
  EXPECT_TRUE(crane_state_bounds().contains(rest));
  EXPECT_EQ(pendulum_energy(rest), 0.0);
}

TEST(FiniteControl, SortedAndValidated) {
  const auto model = lq_model(LqSystem::scalar(1, 1, 1, 1));
  const FiniteControlSystem sys(model, {v1(1.0), v1(-1.0), v1(0.0)});
  EXPECT_EQ(sys.controls[0][0], -1.0);
  EXPECT_EQ(sys.controls[2][0], 1.0);
  EXPECT_THROW(FiniteControlSystem(model, {}), std::invalid_argument);
  const FiniteControlSystem bench = finite_benchmark_system(11);
  EXPECT_EQ(bench.controls.size(), 11u);
  EXPECT_EQ(bench.controls.front()[0], -1.0);
  EXPECT_EQ(bench.controls.back()[0], 1.0);
}

TEST(DpEnumerate, MatchesBruteForceOnTwoStages) {
  const FiniteControlSystem sys = finite_benchmark_system(5);
  const DpResult dp = dp_enumerate(sys, v1(1.0), 2);
  EXPECT_EQ(dp.leaves, 25);
  double best = kInfinity;
  for (const auto &a : sys.controls)
    for (const auto &b : sys.controls) {
      const double x1 = 1.0 + 0.1 * std::sin(1.0) + a[0];
      best = std::min(best, 1.0 + a[0] * a[0] + x1 * x1 + b[0] * b[0]);
    }
  EXPECT_DOUBLE_EQ(dp.value, best);
  ASSERT_EQ(dp.controls.size(), 2u);
  EXPECT_EQ(dp.controls[1][0], 0.0);
}

TEST(DpEnumerate, TiesGoToSmallestSequence) {
  // l = u^2 over the alphabet {-1, 1}: every sequence costs the same.
  auto model = std::make_shared<const SystemModel>(SystemModel::discrete(
      "flat", 1, 1, [](const Vector &x, const Vector &) -> Vector { return x; },
      [](const Vector &, const Vector &u) { return u[0] * u[0]; }, Box::unbounded(1),
      Box({{-1.0, 1.0}})));
  const FiniteControlSystem sys(model, {v1(1.0), v1(-1.0)});
  const DpResult dp = dp_enumerate(sys, v1(0.0), 3);
  EXPECT_EQ(dp.value, 3.0);
  for (const auto &u : dp.controls) EXPECT_EQ(u[0], -1.0);
}

TEST(DpEnumerate, SizeCap) {
  const FiniteControlSystem sys = finite_benchmark_system(11);
  EXPECT_THROW(dp_enumerate(sys, v1(1.0), 6, 100000), EnumerationTooLarge);
  EXPECT_THROW(dp_enumerate(sys, v1(1.0), 0), std::invalid_argument);
}

TEST(DpEnumerate, NeverBelowContinuousOptimum) {
  const FiniteControlSystem sys = finite_benchmark_system(11);
  const OcpSolver solver(sys.model);
  for (int n = 1; n <= 4; ++n) {
    const double dp = dp_enumerate(sys, v1(1.0), n).value;
    EXPECT_GE(dp, solver.value({v1(1.0), n}) - 1e-6);
  }
}

} // namespace
} // namespace ampc
