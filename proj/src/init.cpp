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

#include "matbandit/init.hpp"

#include <algorithm>
#include <cmath>

#include "matbandit/linalg.hpp"

namespace matbandit {

Matrix ArmSamples::context(long k) const {
  Matrix x(d1, d2);
  Eigen::Map<Vector>(x.data(), x.size()) = design.row(k).transpose();
  return x;
}

OfflineBatch collect_offline(const GroundTruth& truth, long n0, Rng& rng) {
  if (n0 < 1) throw InvalidArgument("collect_offline: n0 must be >= 1");
  const int d1 = truth.d1();
  const int d2 = truth.d2();
  const Eigen::Index width = static_cast<Eigen::Index>(d1) * d2;

  // Draw everything first, then route rows to the arm that acted.
  std::vector<Matrix> contexts;
  std::vector<Arm> actions;
  std::vector<double> rewards;
  contexts.reserve(n0);
  for (long k = 0; k < n0; ++k) {
    Matrix x = sample_context(d1, d2, rng);
    const Arm a = rng.uniform() < 0.5 ? Arm::one : Arm::zero;
    rewards.push_back(realize_reward(truth, x, a, rng).y);
    actions.push_back(a);
    contexts.push_back(std::move(x));
  }

  OfflineBatch batch;
  for (Arm arm : kArms) {
    const auto count = std::count(actions.begin(), actions.end(), arm);
    ArmSamples& s = batch.arms[arm];
    s.d1 = d1;
    s.d2 = d2;
    s.design.resize(count, width);
    s.y.resize(count);
  }
  PerArm<Eigen::Index> next{};
  for (long k = 0; k < n0; ++k) {
    ArmSamples& s = batch.arms[actions[k]];
    const Eigen::Index row = next[actions[k]]++;
    s.design.row(row) = Eigen::Map<const Vector>(contexts[k].data(), width).transpose();
    s.y(row) = rewards[k];
  }
  return batch;
}

double default_nuclear_lambda(double sigma, int d1, int d2, long n_arm) {
  if (n_arm < 1) throw InvalidArgument("default_nuclear_lambda: no samples");
  return 2.0 * sigma * std::sqrt(static_cast<double>(std::max(d1, d2)) / n_arm);
}

double nuclear_norm(const Matrix& m) {
  return Eigen::BDCSVD<Matrix>(m).singularValues().sum();
}

namespace {

struct Shrunk {
  Matrix value;
  double nuclear_norm;
};

Shrunk soft_threshold(const Matrix& m, double threshold) {
  if (threshold < 0.0) throw InvalidArgument("soft threshold must be nonnegative");
  const auto svd = linalg::thin_svd(m);
  const Vector shrunk = (svd.s.array() - threshold).max(0.0).matrix();
  return Shrunk{svd.U * shrunk.asDiagonal() * svd.V.transpose(), shrunk.sum()};
}

/// Largest eigenvalue of A^T A / n by power iteration.
double design_curvature(const Matrix& design, int iterations) {
  const double n = static_cast<double>(design.rows());
  Vector v = Vector::Constant(design.cols(), 1.0 / std::sqrt(static_cast<double>(design.cols())));
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    const Vector av = design * v;
    Vector w = design.transpose() * av / n;
    estimate = v.dot(w);
    const double norm = w.norm();
    if (!(norm > 0.0)) return 0.0;
    v = w / norm;
  }
  return estimate;
}

}  // namespace

Matrix singular_value_soft_threshold(const Matrix& m, double threshold) {
  return soft_threshold(m, threshold).value;
}

NuclearNormResult nuclear_norm_estimate(const ArmSamples& samples,
                                        const NuclearNormOptions& options) {
  if (options.lambda < 0.0) throw InvalidArgument("nuclear_norm_estimate: lambda must be >= 0");
  if (samples.size() < 1) throw InvalidArgument("nuclear_norm_estimate: no samples");
  if (options.max_iter < 1) throw InvalidArgument("nuclear_norm_estimate: max_iter must be >= 1");

  const int d1 = samples.d1;
  const int d2 = samples.d2;
  const double n = static_cast<double>(samples.size());
  const Matrix& a = samples.design;
  const Vector& y = samples.y;

  NuclearNormResult result;
  result.lipschitz = std::max(1.05 * design_curvature(a, options.power_iterations), 1e-12);

  // Monotone accelerated proximal gradient. x is the accepted iterate, w the
  // extrapolated point; residuals are tracked as A vec(.) - y and combined
  // linearly, so each iteration costs one product with A and one with A^T.
  Matrix x = Matrix::Zero(d1, d2);
  Vector x_res = -y;
  double x_obj = x_res.squaredNorm() / (2.0 * n);
  Matrix w = x;
  Vector w_res = x_res;
  double w_loss = x_obj;
  double momentum = 1.0;
  bool at_x = true;
  result.objective.push_back(x_obj);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Vector grad_vec = a.transpose() * w_res / n;
    const Eigen::Map<const Matrix> grad(grad_vec.data(), d1, d2);

    // Backtrack on the quadratic upper bound of the smooth part at w.
    Matrix z;
    Vector z_res;
    double z_loss = 0.0;
    double z_nuclear = 0.0;
    for (;;) {
      const double step = 1.0 / result.lipschitz;
      auto prox = soft_threshold(w - step * grad, step * options.lambda);
      z = std::move(prox.value);
      z_nuclear = prox.nuclear_norm;
      const Matrix diff = z - w;
      z_res = a * Eigen::Map<const Vector>(z.data(), z.size()) - y;
      z_loss = z_res.squaredNorm() / (2.0 * n);
      const double bound =
          w_loss + frobenius_inner(grad, diff) + 0.5 * result.lipschitz * diff.squaredNorm();
      if (z_loss <= bound * (1.0 + 1e-12) + 1e-15) break;
      result.lipschitz *= 2.0;
    }
    const double z_obj = z_loss + options.lambda * z_nuclear;

    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const Matrix x_prev = x;
    const Vector x_prev_res = x_res;
    const bool accept = z_obj <= x_obj;
    if (accept) {
      x = z;
      x_res = z_res;
      x_obj = z_obj;
    }
    const double change = (x - x_prev).norm();
    result.objective.push_back(x_obj);
    result.iterations = iter + 1;
    // A plain proximal step from x that fails to descend means x is
    // stationary to working precision.
    if ((accept && change < options.tol) || (!accept && at_x)) {
      result.converged = true;
      break;
    }

    if (accept) {
      const double beta = (momentum - 1.0) / next_momentum;
      w = x + beta * (x - x_prev);
      w_res = x_res + beta * (x_res - x_prev_res);
      momentum = next_momentum;
      at_x = beta == 0.0;
    } else {
      // Restart from the accepted iterate.
      w = x;
      w_res = x_res;
      momentum = 1.0;
      at_x = true;
    }
    w_loss = w_res.squaredNorm() / (2.0 * n);
  }
  result.estimate = std::move(x);
  return result;
}

FactorPair factorize_init(const Matrix& m_init, int r) {
  if (r < 1 || r > std::min(m_init.rows(), m_init.cols())) {
    throw InvalidArgument("factorize_init: rank must lie in [1, min(d1, d2)]");
  }
  const auto svd = linalg::truncated_svd(m_init, r);
  const double top = svd.s(0);
  if (!(top > 0.0) || !(svd.s(r - 1) > kGramFloor * top)) {
    throw DegenerateFactorError("factorize_init: initial estimate has fewer than r nonzero "
                                "singular values");
  }
  const Vector root = svd.s.cwiseSqrt();
  return FactorPair{svd.U * root.asDiagonal(), svd.V * root.asDiagonal()};
}

}  // namespace matbandit
