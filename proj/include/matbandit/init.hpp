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

// Offline initialization: a random-exploration phase, a nuclear-norm
// penalized least-squares fit per arm, and the balanced factorization that
// seeds the online SGD.

#pragma once

#include <vector>

#include "matbandit/common.hpp"
#include "matbandit/lowrank_sgd.hpp"
#include "matbandit/model.hpp"
#include "matbandit/rng.hpp"

namespace matbandit {

/// Samples gathered for one arm. Row k of `design` is vec(X_k) in
/// column-major order.
struct ArmSamples {
  int d1 = 0;
  int d2 = 0;
  Matrix design;
  Vector y;

  long size() const { return static_cast<long>(y.size()); }
  Matrix context(long k) const;
};

struct OfflineBatch {
  PerArm<ArmSamples> arms;

  long count(Arm a) const { return arms[a].size(); }
};

/// n0 rounds of X ~ N(0, I), a ~ Ber(1/2), y from the reward model.
OfflineBatch collect_offline(const GroundTruth& truth, long n0, Rng& rng);

struct NuclearNormOptions {
  double lambda = 0.0;
  int max_iter = 500;
  double tol = 1e-6;
  int power_iterations = 10;
};

struct NuclearNormResult {
  Matrix estimate;
  int iterations = 0;
  bool converged = false;
  double lipschitz = 0.0;          ///< final curvature bound used for the step
  std::vector<double> objective;   ///< objective after each accepted iterate
};

/// lambda = 2 sigma sqrt(d / n_arm), d = max(d1, d2).
double default_nuclear_lambda(double sigma, int d1, int d2, long n_arm);

/// Monotone accelerated proximal gradient for
///   (1 / (2 n)) sum_k (y_k - <M, X_k>)^2 + lambda ||M||_*,
/// with step 1/L, L from power iteration on the design and doubled whenever
/// the quadratic upper bound fails. A prox step that would raise the
/// objective is rejected and the momentum restarted, so the recorded
/// objective never increases. Stops once an accepted step moves M by less
/// than tol in Frobenius norm; non-convergence is reported, not thrown.
NuclearNormResult nuclear_norm_estimate(const ArmSamples& samples,
                                        const NuclearNormOptions& options);

/// Prox of threshold * ||.||_*: every singular value shrunk by `threshold`
/// and floored at zero.
Matrix singular_value_soft_threshold(const Matrix& m, double threshold);

double nuclear_norm(const Matrix& m);

/// U0 = W_U D^{1/2}, V0 = W_V D^{1/2} from the top-r SVD of m_init.
FactorPair factorize_init(const Matrix& m_init, int r);

}  // namespace matbandit
