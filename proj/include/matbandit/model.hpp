// Copyright 2026 The matbandit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Synthetic matrix contextual bandit environment.
//
// Each arm i carries a rank-r parameter M_i = U_i diag(lambda_i) V_i^T. A
// round draws a context X with i.i.d. N(0, 1) entries; pulling arm a returns
// y = <M_a, X> + xi with xi ~ N(0, sigma_a^2) drawn after the action.

#pragma once

#include <cstdint>
#include <vector>

#include "matbandit/common.hpp"
#include "matbandit/rng.hpp"

namespace matbandit {

/// Ground-truth parameter of one arm, stored in factored and dense form.
struct ArmParameter {
  Matrix U;                 ///< d1 x r, orthonormal columns
  Matrix V;                 ///< d2 x r, orthonormal columns
  Vector singular_values;   ///< r positive values, descending
  double sigma = 0.0;       ///< noise standard deviation
  Matrix dense;             ///< U diag(singular_values) V^T

  double condition_number() const {
    return singular_values(0) / singular_values(singular_values.size() - 1);
  }
  /// <M, X> evaluated through the factors.
  double factored_inner(const Matrix& x) const;
};

/// Immutable after construction; safe to share between trial workers.
class GroundTruth {
 public:
  GroundTruth(int d1, int d2, int r, PerArm<ArmParameter> arms);

  int d1() const { return d1_; }
  int d2() const { return d2_; }
  int rank() const { return r_; }

  const ArmParameter& arm(Arm a) const { return arms_[a]; }
  const Matrix& dense(Arm a) const { return arms_[a].dense; }
  double sigma(Arm a) const { return arms_[a].sigma; }

  /// Noiseless mean reward <M_a, X>.
  double mean_reward(Arm a, const Matrix& x) const {
    return frobenius_inner(arms_[a].dense, x);
  }

 private:
  int d1_;
  int d2_;
  int r_;
  PerArm<ArmParameter> arms_;
};

struct TruthSpec {
  int d1 = 50;
  int d2 = 50;
  int r = 3;
  std::vector<double> singular_values_0;  ///< empty means all ones
  std::vector<double> singular_values_1;
  double sigma_0 = 0.1;
  double sigma_1 = 0.1;
};

/// Draws U_i, V_i as Q factors of independent Gaussian matrices.
GroundTruth generate_ground_truth(const TruthSpec& spec, Rng& rng);

/// Builds an arm from explicit factors (validated for orthonormality).
ArmParameter make_arm_parameter(Matrix u, Matrix v, Vector singular_values, double sigma);

Matrix sample_context(int d1, int d2, Rng& rng);

struct Reward {
  double y;
  double noise;
};

Reward realize_reward(const GroundTruth& truth, const Matrix& x, Arm a, Rng& rng);

}  // namespace matbandit
