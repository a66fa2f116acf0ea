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

#pragma once

#include <span>
#include <utility>

#include "matbandit/common.hpp"

namespace matbandit {

/// One-step surrogate
///   M_tilde_i = M_sgd_i + 1{a = i} / P(a = i) * (y - <M_sgd_i, X>) X,
/// where M_sgd_i must be the estimate from before this step's SGD update.
Matrix debias_surrogate(const Matrix& m_sgd_prev, const Matrix& x, double y, Arm arm, Arm a,
                        double pi);

/// Running average of the one-step surrogates for both arms. Both arms are
/// updated every step; the arm not pulled averages in its own M_sgd.
class UnbiasedEstimator {
 public:
  UnbiasedEstimator() = default;
  /// Starts from `initial` per arm with zero steps taken; the initial value
  /// only survives if no step is ever recorded.
  explicit UnbiasedEstimator(PerArm<Matrix> initial) : estimate_(std::move(initial)) {}

  void step(const PerArm<Matrix>& m_sgd_prev, const Matrix& x, double y, Arm a, double pi);

  const Matrix& estimate(Arm a) const { return estimate_[a]; }
  long steps() const { return steps_; }

 private:
  PerArm<Matrix> estimate_;
  long steps_ = 0;
};

/// Plain arithmetic mean; the reference for the streaming average.
Matrix batch_average_oracle(std::span<const Matrix> surrogates);

}  // namespace matbandit
