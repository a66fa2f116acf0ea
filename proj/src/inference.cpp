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

#include "matbandit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "matbandit/linalg.hpp"

namespace matbandit {

// ---------------------------------------------------------------------------
// Targets

InferenceTarget InferenceTarget::from_entries(int d1, int d2,
                                              const std::vector<TargetEntry>& entries,
                                              std::string label) {
  Matrix t = Matrix::Zero(d1, d2);
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= d1 || e.col < 0 || e.col >= d2) {
      throw InvalidArgument("target '" + label + "': entry (" + std::to_string(e.row) + ", " +
                            std::to_string(e.col) + ") outside the matrix");
    }
    t(e.row, e.col) += e.weight;
  }
  InferenceTarget out{std::move(label), std::move(t)};
  out.validate(d1, d2);
  return out;
}

std::vector<TargetEntry> InferenceTarget::entries() const {
  std::vector<TargetEntry> out;
  for (Eigen::Index j = 0; j < T.cols(); ++j) {
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      if (T(i, j) != 0.0) out.push_back({static_cast<int>(i), static_cast<int>(j), T(i, j)});
    }
  }
  return out;
}

void InferenceTarget::validate(int d1, int d2) const {
  if (T.rows() != d1 || T.cols() != d2) {
    throw InvalidArgument("target '" + label + "' has the wrong shape");
  }
  if (!(T.norm() > 0.0)) throw InvalidArgument("target '" + label + "' is zero");
}

// ---------------------------------------------------------------------------
// Online variance estimation

VarianceAccumulators::VarianceAccumulators(std::size_t n_targets) {
  for (Arm a : kArms) s2_sum_[a].assign(n_targets, 0.0);
}

void VarianceAccumulators::accumulate_sigma2(double y, const PerArm<Matrix>& m_sgd_prev,
                                             const Matrix& x, Arm a, double pi) {
  if (!(pi > 0.0 && pi < 1.0)) throw PropensityError("sigma2: propensity must lie in (0, 1)");
  const double residual = y - frobenius_inner(m_sgd_prev[a], x);
  sigma2_sum_[a] += residual * residual / selection_probability(a, pi);
  ++steps_;
}

double tangent_statistic(const Matrix& x, const ProjectionPair& proj, const Matrix& t) {
  const Matrix& bu = proj.left.basis();
  const Matrix& bv = proj.right.basis();
  const Matrix x_bv = x * bv;
  const Matrix bu_x = bu.transpose() * x;
  const Matrix bu_x_bv = bu_x * bv;
  const Matrix t_bv = t * bv;
  const Matrix bu_t = bu.transpose() * t;
  return frobenius_inner(x_bv, t_bv) + frobenius_inner(bu_x, bu_t) -
         2.0 * frobenius_inner(bu_x_bv, bu_t * bv);
}

void VarianceAccumulators::accumulate_S2(const Matrix& x, const ProjectionPair& proj, Arm a,
                                         double pi, const std::vector<InferenceTarget>& targets) {
  if (!(pi > 0.0 && pi < 1.0)) throw PropensityError("S2: propensity must lie in (0, 1)");
  if (targets.size() != n_targets()) {
    throw InvalidArgument("accumulate_S2: target count does not match the accumulator");
  }
  const double p = selection_probability(a, pi);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double stat = tangent_statistic(x, proj, targets[k].T);
    s2_sum_[a][k] += stat * stat / (p * p);
  }
  ++s2_steps_;
}

double VarianceAccumulators::sigma2_hat(Arm a) const {
  if (steps_ < 1) throw InvalidArgument("sigma2_hat: no steps recorded");
  return sigma2_sum_[a] / static_cast<double>(steps_);
}

double VarianceAccumulators::s2_hat(Arm a, std::size_t target) const {
  if (s2_steps_ < 1) throw InvalidArgument("s2_hat: no steps recorded");
  return s2_sum_[a].at(target) / static_cast<double>(s2_steps_);
}

double VarianceAccumulators::sd_hat(Arm a, std::size_t target) const {
  return std::sqrt(sigma2_hat(a) * s2_hat(a, target));
}

// ---------------------------------------------------------------------------
// Intervals

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation (relative error ~1e-9) followed by one
  // Halley step against erfc, which brings it to full double precision.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double two_sided_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("confidence level must lie in (0, 1)");
  }
  return normal_quantile(0.5 + level / 2.0);
}

Matrix project_topr(const Matrix& m_unbs, int r) {
  if (r < 1 || r > std::min(m_unbs.rows(), m_unbs.cols())) {
    throw InvalidArgument("project_topr: rank must lie in [1, min(d1, d2)]");
  }
  const auto svd = linalg::truncated_svd(m_unbs, r);
  return svd.U * (svd.U.transpose() * m_unbs * svd.V) * svd.V.transpose();
}

double point_estimate(const Matrix& m_proj, const InferenceTarget& target) {
  if (m_proj.rows() != target.T.rows() || m_proj.cols() != target.T.cols()) {
    throw InvalidArgument("point_estimate: shape mismatch");
  }
  return frobenius_inner(m_proj, target.T);
}

IntervalEstimate confidence_interval(double m_hat, double sigma_hat, double s_hat, long n,
                                     double level) {
  if (n < 1) throw InvalidArgument("confidence_interval: requires n >= 1");
  if (!(sigma_hat > 0.0) || !(s_hat > 0.0)) {
    throw InvalidArgument("confidence_interval: variance estimates must be positive");
  }
  const double z = two_sided_critical_value(level);
  return IntervalEstimate{m_hat, z * sigma_hat * s_hat / std::sqrt(static_cast<double>(n)),
                          level, sigma_hat, s_hat, n};
}

IntervalEstimate difference_statistic(double m_hat_1, double m_hat_0, double sd_1, double sd_0,
                                      long n, double level) {
  if (n < 1) throw InvalidArgument("difference_statistic: requires n >= 1");
  if (!(sd_1 > 0.0) || !(sd_0 > 0.0)) {
    throw InvalidArgument("difference_statistic: variance estimates must be positive");
  }
  const double pooled = std::sqrt(sd_0 * sd_0 + sd_1 * sd_1);
  const double z = two_sided_critical_value(level);
  return IntervalEstimate{m_hat_1 - m_hat_0, z * pooled / std::sqrt(static_cast<double>(n)),
                          level, pooled, 1.0, n};
}

IntervalEstimate difference_statistic(double m_hat_1, double m_hat_0,
                                      const VarianceAccumulators& acc, std::size_t target,
                                      double level) {
  return difference_statistic(m_hat_1, m_hat_0, acc.sd_hat(Arm::one, target),
                              acc.sd_hat(Arm::zero, target), acc.steps(), level);
}

// ---------------------------------------------------------------------------
// Population variance factor

namespace {

/// P_perp T P_V + P_U T P_V_perp for the true singular spaces.
Matrix tangent_component(const GroundTruth& truth, const Matrix& t, Arm arm) {
  const Matrix& u = truth.arm(arm).U;
  const Matrix& v = truth.arm(arm).V;
  const Matrix pu_t = u * (u.transpose() * t);
  const Matrix t_pv = (t * v) * v.transpose();
  const Matrix pu_t_pv = u * (u.transpose() * t * v) * v.transpose();
  return t_pv + pu_t - 2.0 * pu_t_pv;
}

}  // namespace

double tangent_norm_squared(const GroundTruth& truth, const Matrix& t, Arm arm) {
  return tangent_component(truth, t, arm).squaredNorm();
}

MonteCarloEstimate true_S2_oracle(const GroundTruth& truth, const Matrix& t, Arm arm,
                                  double epsilon, long mc_samples, Rng& rng) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw InvalidArgument("true_S2_oracle: epsilon must lie in (0, 1]");
  }
  if (mc_samples < 2) throw InvalidArgument("true_S2_oracle: need at least two samples");
  if (t.rows() != truth.d1() || t.cols() != truth.d2()) {
    throw InvalidArgument("true_S2_oracle: target shape mismatch");
  }
  // <A, X> with A the tangent component of T gives the numerator; the sign of
  // <M_i - M_{1-i}, X> picks the denominator.
  const Matrix a = tangent_component(truth, t, arm);
  const Matrix b = truth.dense(arm) - truth.dense(other(arm));
  const double* pa = a.data();
  const double* pb = b.data();
  const Eigen::Index size = a.size();
  const double favoured = 1.0 - epsilon / 2.0;
  const double explored = epsilon / 2.0;

  double sum = 0.0;
  double sum_sq = 0.0;
  for (long s = 0; s < mc_samples; ++s) {
    double za = 0.0;
    double zb = 0.0;
    for (Eigen::Index k = 0; k < size; ++k) {
      const double xk = rng.normal();
      za += pa[k] * xk;
      zb += pb[k] * xk;
    }
    const double value = za * za / (zb > 0.0 ? favoured : explored);
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(mc_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return MonteCarloEstimate{mean, std::sqrt(var / n), mc_samples};
}

}  // namespace matbandit
