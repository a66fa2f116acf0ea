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

#include "matbandit/debias.hpp"

namespace matbandit {

Matrix debias_surrogate(const Matrix& m_sgd_prev, const Matrix& x, double y, Arm arm, Arm a,
                        double pi) {
  if (!(pi > 0.0 && pi < 1.0)) {
    throw PropensityError("debias: propensity must lie in (0, 1)");
  }
  if (arm != a) return m_sgd_prev;
  const double residual = y - frobenius_inner(m_sgd_prev, x);
  return m_sgd_prev + (residual / selection_probability(arm, pi)) * x;
}

void UnbiasedEstimator::step(const PerArm<Matrix>& m_sgd_prev, const Matrix& x, double y, Arm a,
                             double pi) {
  if (!(pi > 0.0 && pi < 1.0)) {
    throw PropensityError("debias: propensity must lie in (0, 1)");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  for (Arm arm : kArms) {
    Matrix surrogate = debias_surrogate(m_sgd_prev[arm], x, y, arm, a, pi);
    Matrix& avg = estimate_[arm];
    if (steps_ == 1) {
      avg = std::move(surrogate);
    } else {
      avg = (surrogate + (t - 1.0) * avg) / t;
    }
  }
}

Matrix batch_average_oracle(std::span<const Matrix> surrogates) {
  if (surrogates.empty()) throw InvalidArgument("batch_average_oracle: empty list");
  Matrix sum = Matrix::Zero(surrogates.front().rows(), surrogates.front().cols());
  for (const Matrix& m : surrogates) sum += m;
  return sum / static_cast<double>(surrogates.size());
}

}  // namespace matbandit
