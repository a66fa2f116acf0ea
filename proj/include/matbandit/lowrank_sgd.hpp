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

// Online low-rank estimation by factored, inverse-propensity-weighted SGD.
//
// Each arm keeps factors (U, V) with estimate M_sgd = U V^T. When arm a is
// pulled, its factors move along the gradient of 0.5 (y - <U V^T, X>)^2,
// weighted by 1 / P(a | X, past) and right-multiplied by an r x r
// renormalization sandwich so the step equals a plain gradient step taken at
// the balanced factorization W_U D^{1/2}, W_V D^{1/2} of U V^T. Only r x r
// decompositions are needed per step.

#pragma once

#include <utility>

#include "matbandit/common.hpp"

namespace matbandit {

struct FactorPair {
  Matrix U;  ///< d1 x r
  Matrix V;  ///< d2 x r

  int rank() const { return static_cast<int>(U.cols()); }
};

using ArmFactors = PerArm<FactorPair>;

/// r x r byproducts of the renormalization:
///   U^T U = R_U diag(D_U) R_U^T,  V^T V = R_V diag(D_V) R_V^T,
///   diag(D_U)^{1/2} R_U^T R_V diag(D_V)^{1/2} = Q_U diag(core) Q_V^T.
struct SvdByproducts {
  Matrix R_U;
  Vector D_U;
  Matrix R_V;
  Vector D_V;
  Matrix Q_U;
  Matrix Q_V;
  Vector core;  ///< top-r singular values of U V^T
};

/// eta_t = c * max(t, t_star)^(-alpha).
struct StepSizeSchedule {
  double c = 0.1;
  double alpha = 0.99;
  double t_star = 1.0;

  void validate() const;
  double operator()(long t) const;
};

/// Gram-matrix floor: a Gram eigenvalue below this fraction of the largest
/// one makes the factor pair degenerate.
inline constexpr double kGramFloor = 1e-12;

SvdByproducts compute_byproducts(const FactorPair& pair);

/// Orthogonal projection onto span(basis), held through an orthonormal basis
/// so that products with d x d' matrices cost O(d d' r).
class Projector {
 public:
  Projector() = default;
  explicit Projector(Matrix orthonormal_basis) : basis_(std::move(orthonormal_basis)) {}

  const Matrix& basis() const { return basis_; }
  int rank() const { return static_cast<int>(basis_.cols()); }
  /// Dense d x d projection matrix.
  Matrix matrix() const { return basis_ * basis_.transpose(); }

 private:
  Matrix basis_;
};

struct ProjectionPair {
  Projector left;   ///< P_U onto col(U)
  Projector right;  ///< P_V onto col(V)
};

/// P_U = U R_U D_U^{-1} R_U^T U^T (and the mirror for V), i.e. the projections
/// onto the top-r singular spaces of U V^T.
ProjectionPair projections_from_byproducts(const FactorPair& pair, const SvdByproducts& bp);

/// One SGD step (in place). Only the pulled arm moves. Returns the byproducts
/// computed from the pulled arm's factors before the step.
SvdByproducts sgd_update(ArmFactors& factors, const Matrix& x, double y, Arm a, double pi,
                         double eta);

/// Same step with byproducts already computed from factors[a].
void sgd_update(ArmFactors& factors, const Matrix& x, double y, Arm a, double pi, double eta,
                const SvdByproducts& bp);

/// Reference step: renormalize the pulled arm through a full top-r SVD of
/// U V^T, then take the plain inverse-weighted gradient step. Used to check
/// sgd_update; costs a d1 x d2 SVD per call.
ArmFactors naive_renormalized_update(const ArmFactors& factors, const Matrix& x, double y, Arm a,
                                     double pi, double eta);

/// Dense M_sgd = U V^T.
Matrix current_estimate(const FactorPair& pair);

}  // namespace matbandit
