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

// Inference on linear forms m_T = <M_i, T>.
//
// The point estimate projects the debiased average onto its own top-r
// singular spaces. Its asymptotic standard deviation sigma_i * S_i is
// estimated online from two running sums, so no history is stored:
//   sigma_hat_i^2 = (1/n) sum 1{a_t=i} / P(a_t=i) * (y_t - <M_sgd_{i,t-1}, X_t>)^2
//   S_hat_i^2     = (1/n) sum 1{a_t=i} / P(a_t=i)^2 * <P_perp X P_V + P_U X P_V_perp, T>^2
// with P_U, P_V the singular-space projections of M_sgd_{i,t-1}.

#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "matbandit/common.hpp"
#include "matbandit/lowrank_sgd.hpp"
#include "matbandit/model.hpp"
#include "matbandit/rng.hpp"

namespace matbandit {

/// One nonzero of a target: 0-based (row, col, weight).
struct TargetEntry {
  int row;
  int col;
  double weight;
};

struct InferenceTarget {
  std::string label;
  Matrix T;

  /// Dense target from a sparse entry list; duplicate entries add up.
  static InferenceTarget from_entries(int d1, int d2, const std::vector<TargetEntry>& entries,
                                      std::string label);
  /// Nonzero entries of T in column-major order.
  std::vector<TargetEntry> entries() const;
  void validate(int d1, int d2) const;
};

/// Running sums behind sigma_hat^2 (per arm) and S_hat^2 (per arm, target).
class VarianceAccumulators {
 public:
  VarianceAccumulators() = default;
  explicit VarianceAccumulators(std::size_t n_targets);

  /// Adds the inverse-weighted squared residual of the pulled arm and counts
  /// one step.
  void accumulate_sigma2(double y, const PerArm<Matrix>& m_sgd_prev, const Matrix& x, Arm a,
                         double pi);

  /// Adds the squared tangent-space statistic of the pulled arm for every
  /// target. `proj` must come from arm a's factors at time t-1.
  void accumulate_S2(const Matrix& x, const ProjectionPair& proj, Arm a, double pi,
                     const std::vector<InferenceTarget>& targets);

  long steps() const { return steps_; }
  long s2_steps() const { return s2_steps_; }
  std::size_t n_targets() const { return s2_sum_[Arm::zero].size(); }

  double sigma2_sum(Arm a) const { return sigma2_sum_[a]; }
  double s2_sum(Arm a, std::size_t target) const { return s2_sum_[a].at(target); }

  double sigma2_hat(Arm a) const;
  double s2_hat(Arm a, std::size_t target) const;
  /// sigma_hat * S_hat.
  double sd_hat(Arm a, std::size_t target) const;

 private:
  PerArm<double> sigma2_sum_{};
  PerArm<std::vector<double>> s2_sum_{};
  long steps_ = 0;
  long s2_steps_ = 0;
};

/// <P_U_perp X P_V + P_U X P_V_perp, T>, computed through the projector bases.
double tangent_statistic(const Matrix& x, const ProjectionPair& proj, const Matrix& t);

struct IntervalEstimate {
  double point = 0.0;
  double half_width = 0.0;
  double level = 0.95;
  double sigma_hat = 0.0;
  double s_hat = 0.0;
  long n = 0;

  double lower() const { return point - half_width; }
  double upper() const { return point + half_width; }
  double length() const { return 2.0 * half_width; }
  bool contains(double value) const { return lower() <= value && value <= upper(); }
  bool operator==(const IntervalEstimate&) const = default;
};

/// Standard normal quantile Phi^{-1}(p), p in (0, 1).
double normal_quantile(double p);

/// Two-sided critical value z_{alpha/2} for confidence `level` = 1 - alpha.
double two_sided_critical_value(double level);

/// U_hat U_hat^T M V_hat V_hat^T with U_hat, V_hat the top-r singular vectors
/// of M.
Matrix project_topr(const Matrix& m_unbs, int r);

double point_estimate(const Matrix& m_proj, const InferenceTarget& target);

/// m_hat +- z_{alpha/2} sigma_hat S_hat / sqrt(n).
IntervalEstimate confidence_interval(double m_hat, double sigma_hat, double s_hat, long n,
                                     double level);

/// Interval for m_T^(1) - m_T^(0) with variance (sd_0^2 + sd_1^2) / n where
/// sd_i = sigma_hat_i S_hat_i. sigma_hat/s_hat of the result hold the pooled
/// standard deviation and 1.
IntervalEstimate difference_statistic(double m_hat_1, double m_hat_0, double sd_1, double sd_0,
                                      long n, double level);
IntervalEstimate difference_statistic(double m_hat_1, double m_hat_0,
                                      const VarianceAccumulators& acc, std::size_t target,
                                      double level);

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

/// Monte Carlo value of the asymptotic variance factor
///   S_i^2 = E[ <U_perp U_perp^T X V V^T + U U^T X V_perp V_perp^T, T>^2
///              / ((1 - eps) 1{<M_i - M_{1-i}, X> > 0} + eps / 2) ]
/// over X with i.i.d. N(0, 1) entries. epsilon may be 1 here.
MonteCarloEstimate true_S2_oracle(const GroundTruth& truth, const Matrix& t, Arm arm,
                                  double epsilon, long mc_samples, Rng& rng);

/// ||U_perp^T T V||_F^2 + ||U^T T V_perp||_F^2 for the true singular spaces of
/// `arm`; the variance factor of the tangent statistic without weighting.
double tangent_norm_squared(const GroundTruth& truth, const Matrix& t, Arm arm);

}  // namespace matbandit
