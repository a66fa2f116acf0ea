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

#include "matbandit/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "matbandit/linalg.hpp"

namespace matbandit {

namespace {

constexpr double kOrthoTol = 1e-10;

Vector singular_values_or_ones(const std::vector<double>& given, int r) {
  if (given.empty()) return Vector::Ones(r);
  if (static_cast<int>(given.size()) != r) {
    throw InvalidArgument("generate_ground_truth: expected " + std::to_string(r) +
                          " singular values, got " + std::to_string(given.size()));
  }
  return Eigen::Map<const Vector>(given.data(), r);
}

void validate_singular_values(const Vector& s) {
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (!(s(k) > 0.0) || !std::isfinite(s(k))) {
      throw InvalidArgument("singular values must be positive and finite");
    }
    if (k > 0 && s(k) > s(k - 1)) {
      throw InvalidArgument("singular values must be in descending order");
    }
  }
}

}  // namespace

double ArmParameter::factored_inner(const Matrix& x) const {
  // <U S V^T, X> = trace(S U^T X V)
  const Matrix core = U.transpose() * x * V;
  return core.diagonal().dot(singular_values);
}

ArmParameter make_arm_parameter(Matrix u, Matrix v, Vector singular_values, double sigma) {
  const auto r = singular_values.size();
  if (u.cols() != r || v.cols() != r) {
    throw InvalidArgument("make_arm_parameter: factor widths must equal rank");
  }
  validate_singular_values(singular_values);
  if (!(sigma >= 0.0)) throw InvalidArgument("noise level must be nonnegative");
  const Matrix eye = Matrix::Identity(r, r);
  if (linalg::max_abs_diff(u.transpose() * u, eye) > kOrthoTol ||
      linalg::max_abs_diff(v.transpose() * v, eye) > kOrthoTol) {
    throw InvalidArgument("make_arm_parameter: factors are not orthonormal");
  }
  Matrix dense = u * singular_values.asDiagonal() * v.transpose();
  return ArmParameter{std::move(u), std::move(v), std::move(singular_values), sigma,
                      std::move(dense)};
}

GroundTruth::GroundTruth(int d1, int d2, int r, PerArm<ArmParameter> arms)
    : d1_(d1), d2_(d2), r_(r), arms_(std::move(arms)) {
  for (Arm a : kArms) {
    const auto& p = arms_[a];
    if (p.U.rows() != d1 || p.V.rows() != d2 || p.U.cols() != r) {
      throw InvalidArgument("GroundTruth: arm dimensions do not match (d1, d2, r)");
    }
  }
  if ((arms_[Arm::one].dense - arms_[Arm::zero].dense).norm() == 0.0) {
    throw InvalidArgument("GroundTruth: the two arms must differ");
  }
}

GroundTruth generate_ground_truth(const TruthSpec& spec, Rng& rng) {
  if (spec.d1 < 1 || spec.d2 < 1 || spec.r < 1) {
    throw InvalidArgument("generate_ground_truth: dimensions and rank must be positive");
  }
  if (spec.r > std::min(spec.d1, spec.d2)) {
    throw InvalidArgument("generate_ground_truth: rank exceeds min(d1, d2)");
  }
  const Vector s0 = singular_values_or_ones(spec.singular_values_0, spec.r);
  const Vector s1 = singular_values_or_ones(spec.singular_values_1, spec.r);
  validate_singular_values(s0);
  validate_singular_values(s1);

  PerArm<ArmParameter> arms;
  const std::array<const Vector*, 2> svals = {&s0, &s1};
  const std::array<double, 2> sigmas = {spec.sigma_0, spec.sigma_1};
  for (Arm a : kArms) {
    Matrix u = linalg::orthonormalize(rng.gaussian_matrix(spec.d1, spec.r));
    Matrix v = linalg::orthonormalize(rng.gaussian_matrix(spec.d2, spec.r));
    arms[a] = make_arm_parameter(std::move(u), std::move(v), *svals[index(a)], sigmas[index(a)]);
  }
  // Identical arms have probability zero; redraw V_0 until they differ.
  while ((arms[Arm::one].dense - arms[Arm::zero].dense).norm() == 0.0) {
    auto& p = arms[Arm::zero];
    p = make_arm_parameter(p.U, linalg::orthonormalize(rng.gaussian_matrix(spec.d2, spec.r)),
                           p.singular_values, p.sigma);
  }
  return GroundTruth(spec.d1, spec.d2, spec.r, std::move(arms));
}

Matrix sample_context(int d1, int d2, Rng& rng) { return rng.gaussian_matrix(d1, d2); }

Reward realize_reward(const GroundTruth& truth, const Matrix& x, Arm a, Rng& rng) {
  const double noise = truth.sigma(a) * rng.normal();
  return Reward{truth.mean_reward(a, x) + noise, noise};
}

}  // namespace matbandit
