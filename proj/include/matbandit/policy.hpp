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

#include "matbandit/common.hpp"
#include "matbandit/rng.hpp"

namespace matbandit {

struct PolicyConfig {
  double epsilon = 0.1;

  /// Throws InvalidArgument unless 0 < epsilon < 1.
  void validate() const;
};

/// Epsilon-greedy probability of pulling arm one given the estimated
/// advantage score <M1_hat - M0_hat, X>. A tie (score == 0) counts as arm
/// zero being preferred.
double propensity_from_score(double score, double epsilon);

/// Epsilon-greedy propensity from the previous-step dense estimates.
double propensity(const Matrix& m1_hat, const Matrix& m0_hat, const Matrix& x, double epsilon);

/// a = 1 with probability pi.
Arm draw_action(double pi, Rng& rng);

}  // namespace matbandit
