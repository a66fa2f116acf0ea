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

#include "matbandit/policy.hpp"

#include <cmath>

namespace matbandit {

void PolicyConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidArgument("epsilon must lie strictly inside (0, 1)");
  }
}

double propensity_from_score(double score, double epsilon) {
  if (!std::isfinite(score)) {
    throw NumericalError("propensity: non-finite advantage score (estimator diverged)");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidArgument("propensity: epsilon must lie strictly inside (0, 1)");
  }
  return score > 0.0 ? 1.0 - epsilon / 2.0 : epsilon / 2.0;
}

double propensity(const Matrix& m1_hat, const Matrix& m0_hat, const Matrix& x, double epsilon) {
  if (m1_hat.rows() != x.rows() || m1_hat.cols() != x.cols() || m0_hat.rows() != x.rows() ||
      m0_hat.cols() != x.cols()) {
    throw InvalidArgument("propensity: estimate and context shapes differ");
  }
  const double score = frobenius_inner(m1_hat, x) - frobenius_inner(m0_hat, x);
  return propensity_from_score(score, epsilon);
}

Arm draw_action(double pi, Rng& rng) {
  if (!(pi >= 0.0 && pi <= 1.0)) {
    throw PropensityError("draw_action: propensity outside [0, 1]");
  }
  return rng.uniform() < pi ? Arm::one : Arm::zero;
}

}  // namespace matbandit
