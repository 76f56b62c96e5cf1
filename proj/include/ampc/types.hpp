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

#ifndef AMPC_TYPES_HPP
#define AMPC_TYPES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ampc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ControlSequence = std::vector<Vector>;
using StateSequence = std::vector<Vector>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Closed interval [lower, upper]; either end may be infinite.
struct Interval {
  double lower = -kInfinity;
  double upper = kInfinity;

  bool empty() const { return !(lower <= upper); }
  bool contains(double v) const { return v >= lower && v <= upper; }
  double clamp(double v) const { return std::min(std::max(v, lower), upper); }
  double distance(double v) const {
    if (v < lower) return lower - v;
    if (v > upper) return v - upper;
    return 0.0;
  }
};

/// Axis-aligned box, one interval per component.
class Box {
public:
  Box() = default;
  explicit Box(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {}
  static Box unbounded(int dim) { return Box(std::vector<Interval>(dim)); }

  int dim() const { return static_cast<int>(intervals_.size()); }
  const Interval &operator[](int i) const { return intervals_[i]; }
  const std::vector<Interval> &intervals() const { return intervals_; }

  bool contains(const Vector &v) const {
    for (int i = 0; i < dim(); ++i)
      if (!intervals_[i].contains(v[i])) return false;
    return true;
  }

  Vector project(const Vector &v) const {
    Vector out(v.size());
    for (int i = 0; i < dim(); ++i) out[i] = intervals_[i].clamp(v[i]);
    return out;
  }

  /// Squared Euclidean distance from v to the box.
  double squared_distance(const Vector &v) const {
    double d2 = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double d = intervals_[i].distance(v[i]);
      d2 += d * d;
    }
    return d2;
  }

private:
  std::vector<Interval> intervals_;
};

// Error hierarchy. Every failure the library reports derives from ampc::Error.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The adaptive step controller of the ODE integrator underflowed, or the
/// vector field produced a non-finite value / was evaluated at a singular state.
class IntegrationFailure : public Error {
public:
  using Error::Error;
};

/// The shooting objective is not finite at the initial iterate.
class NonFiniteObjective : public Error {
public:
  using Error::Error;
};

/// An auxiliary optimal control solve failed.
class SolverFailure : public Error {
public:
  using Error::Error;
};

/// Stage cost below the equilibrium threshold: estimation is meaningless here.
class EquilibriumReached : public Error {
public:
  EquilibriumReached(const std::string &what, double stage_cost)
      : Error(what), stage_cost_(stage_cost) {}
  double stage_cost() const { return stage_cost_; }

private:
  double stage_cost_;
};

/// No horizon up to the configured cap attains the requested suboptimality.
class HorizonCapReached : public Error {
public:
  HorizonCapReached(const std::string &what, int cap, double best_alpha)
      : Error(what), cap_(cap), best_alpha_(best_alpha) {}
  int cap() const { return cap_; }
  double best_alpha() const { return best_alpha_; }

private:
  int cap_;
  double best_alpha_;
};

class EnumerationTooLarge : public Error {
public:
  using Error::Error;
};

class SingularInnovation : public Error {
public:
  using Error::Error;
};

class NoFeasibleGamma : public Error {
public:
  using Error::Error;
};

} // namespace ampc

#endif // AMPC_TYPES_HPP
