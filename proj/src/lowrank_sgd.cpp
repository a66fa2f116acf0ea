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

#include "matbandit/lowrank_sgd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "matbandit/linalg.hpp"

namespace matbandit {

namespace {

double inverse_weight(Arm a, double pi) {
  if (!(pi > 0.0 && pi < 1.0)) {
    throw PropensityError("inverse weight undefined: propensity must lie in (0, 1)");
  }
  return 1.0 / selection_probability(a, pi);
}

void check_gram(const Vector& d, const char* which) {
  const double top = d.maxCoeff();
  if (!(top > 0.0) || !(d.minCoeff() > kGramFloor * top)) {
    throw DegenerateFactorError(std::string("degenerate factor: Gram matrix of ") + which +
                                " is numerically singular");
  }
}

}  // namespace

void StepSizeSchedule::validate() const {
  if (!(c > 0.0)) throw InvalidArgument("step size constant c must be positive");
  if (!(alpha > 0.5 && alpha <= 1.0)) throw InvalidArgument("step size exponent must lie in (0.5, 1]");
  if (!(t_star >= 1.0)) throw InvalidArgument("t_star must be at least 1");
}

double StepSizeSchedule::operator()(long t) const {
  if (t < 1) throw InvalidArgument("step index must be >= 1");
  return c * std::pow(std::max(static_cast<double>(t), t_star), -alpha);
}

SvdByproducts compute_byproducts(const FactorPair& pair) {
  const auto eu = linalg::symmetric_eigen(pair.U.transpose() * pair.U);
  const auto ev = linalg::symmetric_eigen(pair.V.transpose() * pair.V);
  check_gram(eu.d, "U");
  check_gram(ev.d, "V");

  const Vector du_sqrt = eu.d.cwiseSqrt();
  const Vector dv_sqrt = ev.d.cwiseSqrt();
  const Matrix core = du_sqrt.asDiagonal() * (eu.R.transpose() * ev.R) * dv_sqrt.asDiagonal();
  auto svd = linalg::thin_svd(core);

  return SvdByproducts{eu.R, eu.d, ev.R, ev.d, std::move(svd.U), std::move(svd.V),
                       std::move(svd.s)};
}

ProjectionPair projections_from_byproducts(const FactorPair& pair, const SvdByproducts& bp) {
  check_gram(bp.D_U, "U");
  check_gram(bp.D_V, "V");
  Matrix left = pair.U * bp.R_U * bp.D_U.cwiseSqrt().cwiseInverse().asDiagonal();
  Matrix right = pair.V * bp.R_V * bp.D_V.cwiseSqrt().cwiseInverse().asDiagonal();
  return ProjectionPair{Projector(std::move(left)), Projector(std::move(right))};
}

void sgd_update(ArmFactors& factors, const Matrix& x, double y, Arm a, double pi, double eta,
                const SvdByproducts& bp) {
  const double weight = inverse_weight(a, pi);
  FactorPair& pair = factors[a];

  const Matrix xv = x * pair.V;               // d1 x r
  const Matrix xtu = x.transpose() * pair.U;  // d2 x r
  const double residual = pair.U.cwiseProduct(xv).sum() - y;

  const Vector du_sqrt = bp.D_U.cwiseSqrt();
  const Vector dv_sqrt = bp.D_V.cwiseSqrt();
  // R_V D_V^{-1/2} Q_V Q_U^T D_U^{1/2} R_U^T and its mirror.
  const Matrix sandwich_v = bp.R_V * dv_sqrt.cwiseInverse().asDiagonal() * bp.Q_V *
                            bp.Q_U.transpose() * du_sqrt.asDiagonal() * bp.R_U.transpose();
  const Matrix sandwich_u = bp.R_U * du_sqrt.cwiseInverse().asDiagonal() * bp.Q_U *
                            bp.Q_V.transpose() * dv_sqrt.asDiagonal() * bp.R_V.transpose();

  const double scale = eta * weight * residual;
  pair.U.noalias() -= scale * (xv * sandwich_v);
  pair.V.noalias() -= scale * (xtu * sandwich_u);

  if (!pair.U.allFinite() || !pair.V.allFinite()) {
    throw NumericalError("sgd_update: factors became non-finite");
  }
}

SvdByproducts sgd_update(ArmFactors& factors, const Matrix& x, double y, Arm a, double pi,
                         double eta) {
  SvdByproducts bp = compute_byproducts(factors[a]);
  sgd_update(factors, x, y, a, pi, eta, bp);
  return bp;
}

ArmFactors naive_renormalized_update(const ArmFactors& factors, const Matrix& x, double y, Arm a,
                                     double pi, double eta) {
  const double weight = inverse_weight(a, pi);
  ArmFactors out = factors;
  const FactorPair& pair = factors[a];
  const int r = pair.rank();

  const auto svd = linalg::truncated_svd(current_estimate(pair), r);
  if (!(svd.s(r - 1) > kGramFloor * svd.s(0))) {
    throw DegenerateFactorError("naive_renormalized_update: product has rank below r");
  }
  const Vector root = svd.s.cwiseSqrt();
  const Matrix u = svd.U * root.asDiagonal();
  const Matrix v = svd.V * root.asDiagonal();

  const double residual = frobenius_inner(u * v.transpose(), x) - y;
  const double scale = eta * weight * residual;
  out[a].U = u - scale * (x * v);
  out[a].V = v - scale * (x.transpose() * u);
  return out;
}

Matrix current_estimate(const FactorPair& pair) { return pair.U * pair.V.transpose(); }

}  // namespace matbandit
