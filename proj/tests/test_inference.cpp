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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "matbandit/inference.hpp"
#include "matbandit/linalg.hpp"
#include "matbandit/policy.hpp"
#include "oracles.hpp"

namespace matbandit {
namespace {

GroundTruth small_truth(int d, int r, std::uint64_t seed, double sigma = 0.1) {
  TruthSpec spec;
  spec.d1 = spec.d2 = d;
  spec.r = r;
  spec.singular_values_0.assign(r, 1.0);
  spec.singular_values_1.assign(r, 1.0);
  spec.sigma_0 = spec.sigma_1 = sigma;
  Rng rng(seed);
  return generate_ground_truth(spec, rng);
}

ProjectionPair true_projections(const GroundTruth& truth, Arm a) {
  return {Projector(truth.arm(a).U), Projector(truth.arm(a).V)};
}

TEST(Targets, FromEntriesAddsDuplicatesAndValidates) {
  const auto t = InferenceTarget::from_entries(3, 3, {{0, 0, 1.0}, {0, 0, 2.0}, {2, 1, -1.0}}, "T");
  EXPECT_DOUBLE_EQ(t.T(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(t.T(2, 1), -1.0);
  EXPECT_EQ(t.entries().size(), 2u);
  EXPECT_THROW(InferenceTarget::from_entries(3, 3, {{3, 0, 1.0}}, "bad"), InvalidArgument);
  EXPECT_THROW(InferenceTarget::from_entries(3, 3, {{0, 0, 1.0}, {0, 0, -1.0}}, "zero"),
               InvalidArgument);
}

TEST(Accumulators, OnlyPulledArmContributes) {
  VarianceAccumulators acc(1);
  const Matrix x = Matrix::Identity(2, 2);
  const PerArm<Matrix> prev{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  acc.accumulate_sigma2(2.0, prev, x, Arm::one, 0.8);
  EXPECT_DOUBLE_EQ(acc.sigma2_sum(Arm::one), 4.0 / 0.8);
  EXPECT_DOUBLE_EQ(acc.sigma2_sum(Arm::zero), 0.0);
  acc.accumulate_sigma2(1.0, prev, x, Arm::zero, 0.8);
  EXPECT_NEAR(acc.sigma2_sum(Arm::zero), 1.0 / 0.2, 1e-12);
  EXPECT_EQ(acc.steps(), 2);
  EXPECT_NEAR(acc.sigma2_hat(Arm::one), 2.5, 1e-12);
}

TEST(Accumulators, ZeroResidualAndEmptyState) {
  VarianceAccumulators acc(2);
  EXPECT_THROW(acc.sigma2_hat(Arm::zero), InvalidArgument);
  EXPECT_THROW(acc.s2_hat(Arm::zero, 0), InvalidArgument);
  Rng rng(1);
  const Matrix m = rng.gaussian_matrix(3, 3);
  const Matrix x = rng.gaussian_matrix(3, 3);
  acc.accumulate_sigma2(frobenius_inner(m, x), {m, m}, x, Arm::zero, 0.5);
  EXPECT_NEAR(acc.sigma2_sum(Arm::zero), 0.0, 1e-20);
  EXPECT_THROW(acc.accumulate_sigma2(0.0, {m, m}, x, Arm::zero, 1.0), PropensityError);
}

TEST(Accumulators, SigmaHatAtFrozenTruth) {
  const GroundTruth truth = small_truth(5, 2, 3);
  Rng rng(4);
  const double eps = 0.1;
  VarianceAccumulators acc(0);
  const long n = 100000;
  PerArm<std::vector<double>> terms;
  const PerArm<Matrix> m{truth.dense(Arm::zero), truth.dense(Arm::one)};
  for (long t = 0; t < n; ++t) {
    const Matrix x = sample_context(5, 5, rng);
    const double pi = propensity(m[Arm::one], m[Arm::zero], x, eps);
    const Arm a = draw_action(pi, rng);
    const double y = realize_reward(truth, x, a, rng).y;
    const double before = acc.sigma2_sum(a);
    acc.accumulate_sigma2(y, m, x, a, pi);
    terms[a].push_back(acc.sigma2_sum(a) - before);
    terms[other(a)].push_back(0.0);
  }
  for (Arm a : kArms) {
    const auto mo = oracle::moments(terms[a]);
    EXPECT_NEAR(acc.sigma2_hat(a), mo.mean, 1e-12);
    EXPECT_LE(std::abs(mo.mean - 0.01), 3.0 * mo.std_error);
  }
}

TEST(Accumulators, SHatAtFrozenProjectionsMatchesClosedForm) {
  const GroundTruth truth = small_truth(6, 2, 5);
  const std::vector<InferenceTarget> targets{
      InferenceTarget::from_entries(6, 6, {{0, 0, 1.0}}, "T1"),
      InferenceTarget::from_entries(6, 6, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, -3.0}}, "T2")};
  const PerArm<Matrix> m{truth.dense(Arm::zero), truth.dense(Arm::one)};
  const PerArm<ProjectionPair> proj{true_projections(truth, Arm::zero),
                                    true_projections(truth, Arm::one)};
  for (double eps : {1.0, 0.2}) {
    Rng rng(6);
    VarianceAccumulators acc(targets.size());
    const long n = 200000;
    PerArm<std::vector<std::vector<double>>> terms;
    for (Arm a : kArms) terms[a].assign(targets.size(), {});
    for (long t = 0; t < n; ++t) {
      const Matrix x = sample_context(6, 6, rng);
      const double pi = eps == 1.0 ? 0.5 : propensity(m[Arm::one], m[Arm::zero], x, eps);
      const Arm a = draw_action(pi, rng);
      std::vector<double> before;
      for (std::size_t k = 0; k < targets.size(); ++k) before.push_back(acc.s2_sum(a, k));
      acc.accumulate_S2(x, proj[a], a, pi, targets);
      for (std::size_t k = 0; k < targets.size(); ++k) {
        terms[a][k].push_back(acc.s2_sum(a, k) - before[k]);
        terms[other(a)][k].push_back(0.0);
      }
    }
    for (Arm a : kArms) {
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto mo = oracle::moments(terms[a][k]);
        const double expected = oracle::closed_form_S2(truth, targets[k].T, a, eps);
        EXPECT_NEAR(acc.s2_hat(a, k), mo.mean, 1e-9 * mo.mean);
        EXPECT_LE(std::abs(mo.mean - expected), 3.0 * mo.std_error)
            << "eps " << eps << " arm " << index(a) << " target " << k;
      }
    }
  }
}

TEST(Accumulators, TargetCountMismatchThrows) {
  VarianceAccumulators acc(1);
  const GroundTruth truth = small_truth(4, 1, 2);
  EXPECT_THROW(acc.accumulate_S2(Matrix::Ones(4, 4), true_projections(truth, Arm::zero),
                                 Arm::zero, 0.5, {}),
               InvalidArgument);
}

TEST(TangentStatistic, MatchesDenseProjectionFormula) {
  Rng rng(7);
  const Matrix u = linalg::orthonormalize(rng.gaussian_matrix(7, 2));
  const Matrix v = linalg::orthonormalize(rng.gaussian_matrix(5, 2));
  const ProjectionPair proj{Projector(u), Projector(v)};
  const Matrix pu = u * u.transpose();
  const Matrix pv = v * v.transpose();
  for (int k = 0; k < 20; ++k) {
    const Matrix x = rng.gaussian_matrix(7, 5);
    const Matrix t = rng.gaussian_matrix(7, 5);
    const double dense = (x * pv).cwiseProduct(t).sum() + (pu * x).cwiseProduct(t).sum() -
                         2.0 * (pu * x * pv).cwiseProduct(t).sum();
    EXPECT_NEAR(tangent_statistic(x, proj, t), dense, 1e-10);
  }
}

TEST(TangentStatistic, SeesOnlyTheTangentComponent) {
  Rng rng(8);
  const Matrix u = linalg::orthonormalize(rng.gaussian_matrix(6, 2));
  const Matrix v = linalg::orthonormalize(rng.gaussian_matrix(6, 2));
  const ProjectionPair proj{Projector(u), Projector(v)};
  const Matrix up = oracle::complement(u);
  const Matrix vp = oracle::complement(v);
  const Matrix x = rng.gaussian_matrix(6, 6);
  EXPECT_NEAR(tangent_statistic(x, proj, u * rng.gaussian_matrix(2, 2) * v.transpose()), 0.0,
              1e-10);
  EXPECT_NEAR(tangent_statistic(x, proj, up * rng.gaussian_matrix(4, 4) * vp.transpose()), 0.0,
              1e-10);
  const Matrix mixed = up * rng.gaussian_matrix(4, 2) * v.transpose();
  EXPECT_NEAR(tangent_statistic(x, proj, mixed), frobenius_inner(x, mixed), 1e-10);
}

TEST(ProjectTopR, IdentityOnRankR) {
  Rng rng(9);
  const Matrix m = rng.gaussian_matrix(8, 3) * rng.gaussian_matrix(3, 6);
  EXPECT_LT(oracle::relative_error(project_topr(m, 3), m), 1e-10);
}

TEST(ProjectTopR, MatchesFullSvdOracle) {
  Rng rng(10);
  for (int k = 0; k < 20; ++k) {
    const Matrix m = rng.gaussian_matrix(9, 4) * rng.gaussian_matrix(4, 7) +
                     0.3 * rng.gaussian_matrix(9, 7);
    const Matrix proj = project_topr(m, 4);
    EXPECT_LT(oracle::relative_error(proj, oracle::sandwich_topr(m, 4)), 1e-10);
    EXPECT_LT(oracle::relative_error(proj, oracle::best_rank_r(m, 4)), 1e-10);
  }
  EXPECT_THROW(project_topr(Matrix::Ones(3, 3), 4), InvalidArgument);
  EXPECT_THROW(project_topr(Matrix::Ones(3, 3), 0), InvalidArgument);
}

TEST(ProjectTopR, SmallPerturbationStaysClose) {
  Rng rng(11);
  const Matrix m = rng.gaussian_matrix(10, 2) * rng.gaussian_matrix(2, 10);
  const Matrix noise = rng.gaussian_matrix(10, 10);
  EXPECT_LT((project_topr(m + 1e-8 * noise, 2) - m).norm(), 1e-6);
}

TEST(PointEstimate, LinearForms) {
  Rng rng(12);
  const Matrix m = rng.gaussian_matrix(5, 5);
  const auto t1 = InferenceTarget::from_entries(5, 5, {{0, 0, 1.0}}, "T1");
  const auto t2 =
      InferenceTarget::from_entries(5, 5, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, -3.0}}, "T2");
  EXPECT_DOUBLE_EQ(point_estimate(m, t1), m(0, 0));
  EXPECT_NEAR(point_estimate(m, t2), m(0, 0) + 2 * m(1, 1) - 3 * m(2, 2), 1e-14);
  EXPECT_THROW(point_estimate(Matrix::Zero(4, 5), t1), InvalidArgument);
}

TEST(Intervals, NormalQuantiles) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_NEAR(normal_quantile(0.75), 0.6744897501960817, 1e-14);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-10);
  EXPECT_NEAR(normal_quantile(0.995), 2.5758293035489004, 1e-13);
  EXPECT_NEAR(two_sided_critical_value(0.95), 1.959963984540054, 1e-14);
  EXPECT_NEAR(two_sided_critical_value(0.5), 0.6744897501960817, 1e-14);
  EXPECT_THROW(normal_quantile(0.0), InvalidArgument);
  EXPECT_THROW(two_sided_critical_value(1.0), InvalidArgument);
}

TEST(Intervals, WaldInterval) {
  const IntervalEstimate ci = confidence_interval(0.3, 0.1, 1.0, 100, 0.95);
  EXPECT_NEAR(ci.half_width, 0.01959963984540054, 1e-15);
  EXPECT_NEAR(ci.lower(), 0.3 - 0.01959963984540054, 1e-15);
  EXPECT_TRUE(ci.contains(0.31));
  EXPECT_FALSE(ci.contains(0.33));
  EXPECT_THROW(confidence_interval(0.0, 0.0, 1.0, 100, 0.95), InvalidArgument);
  EXPECT_THROW(confidence_interval(0.0, 0.1, -1.0, 100, 0.95), InvalidArgument);
  EXPECT_THROW(confidence_interval(0.0, 0.1, 1.0, 0, 0.95), InvalidArgument);
}

TEST(Intervals, DifferenceUsesPooledStandardDeviation) {
  const IntervalEstimate d = difference_statistic(0.5, 0.2, 0.3, 0.3, 400, 0.95);
  EXPECT_DOUBLE_EQ(d.point, 0.3);
  EXPECT_NEAR(d.half_width, 1.959963984540054 * 0.3 * std::sqrt(2.0) / 20.0, 1e-15);
  VarianceAccumulators acc(1);
  const PerArm<Matrix> prev{Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  acc.accumulate_sigma2(1.0, prev, Matrix::Ones(1, 1), Arm::one, 0.5);
  acc.accumulate_sigma2(1.0, prev, Matrix::Ones(1, 1), Arm::zero, 0.5);
  const ProjectionPair proj{Projector(Matrix::Ones(1, 1)), Projector(Matrix::Ones(1, 1))};
  const std::vector<InferenceTarget> t{InferenceTarget::from_entries(1, 1, {{0, 0, 1.0}}, "T")};
  EXPECT_THROW(difference_statistic(0.0, 0.0, acc, 0, 0.95), InvalidArgument);
  // A 1 x 1 problem has no tangent complement: the statistic is exactly zero.
  acc.accumulate_S2(Matrix::Ones(1, 1), proj, Arm::one, 0.5, t);
  EXPECT_DOUBLE_EQ(acc.s2_hat(Arm::one, 0), 0.0);
}

TEST(TrueS2Oracle, MatchesClosedForm) {
  const GroundTruth truth = small_truth(10, 2, 13);
  const Matrix t1 = InferenceTarget::from_entries(10, 10, {{0, 0, 1.0}}, "T1").T;
  Rng rng(14);
  const Matrix t_rand = rng.gaussian_matrix(10, 10);
  for (double eps : {1.0, 0.1}) {
    for (Arm a : kArms) {
      for (const Matrix* t : {&t1, &t_rand}) {
        const auto mc = true_S2_oracle(truth, *t, a, eps, 200000, rng);
        EXPECT_LE(std::abs(mc.value - oracle::closed_form_S2(truth, *t, a, eps)),
                  3.0 * mc.std_error)
            << "eps " << eps << " arm " << index(a);
        EXPECT_NEAR(tangent_norm_squared(truth, *t, a),
                    oracle::tangent_norm_squared(truth.arm(a).U, truth.arm(a).V, *t), 1e-10);
      }
    }
  }
}

TEST(TrueS2Oracle, LowerBoundAndDegenerateTarget) {
  const GroundTruth truth = small_truth(8, 2, 15);
  Rng rng(16);
  const double eps = 0.1;
  const Matrix t = rng.gaussian_matrix(8, 8);
  const auto mc = true_S2_oracle(truth, t, Arm::one, eps, 50000, rng);
  EXPECT_GE(mc.value + 3.0 * mc.std_error,
            tangent_norm_squared(truth, t, Arm::one) / (1.0 - eps / 2.0));
  const auto& p = truth.arm(Arm::one);
  const Matrix inside = p.U * rng.gaussian_matrix(2, 2) * p.V.transpose();
  EXPECT_NEAR(true_S2_oracle(truth, inside, Arm::one, eps, 1000, rng).value, 0.0, 1e-20);
  EXPECT_THROW(true_S2_oracle(truth, t, Arm::one, 0.0, 1000, rng), InvalidArgument);
  EXPECT_THROW(true_S2_oracle(truth, t, Arm::one, eps, 1, rng), InvalidArgument);
}

}  // namespace
}  // namespace matbandit
