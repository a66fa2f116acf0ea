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

#include "matbandit/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace matbandit::linalg {

namespace {

constexpr double kSignTiny = 1e-14;

}  // namespace

void normalize_signs(Matrix& u, Matrix* v) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const double scale = u.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double x = u(i, j);
      if (std::abs(x) > kSignTiny * std::max(scale, 1.0)) {
        if (x < 0.0) {
          u.col(j) = -u.col(j);
          if (v != nullptr) v->col(j) = -v->col(j);
        }
        break;
      }
    }
  }
}

Svd thin_svd(const Matrix& a) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("thin_svd: SVD did not converge");
  }
  Svd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  normalize_signs(out.U, &out.V);
  return out;
}

Svd truncated_svd(const Matrix& a, int k) {
  const auto kmax = std::min(a.rows(), a.cols());
  if (k < 0 || k > kmax) {
    throw InvalidArgument("truncated_svd: rank exceeds min(rows, cols)");
  }
  Svd full = thin_svd(a);
  return Svd{full.U.leftCols(k), full.s.head(k), full.V.leftCols(k)};
}

Matrix orthonormalize(const Matrix& a) {
  if (a.cols() > a.rows()) {
    throw InvalidArgument("orthonormalize: more columns than rows");
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix& packed = qr.matrixQR();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

SymmetricEigen symmetric_eigen(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  if (es.info() != Eigen::Success) {
    throw NumericalError("symmetric_eigen: decomposition failed");
  }
  // Eigen returns ascending order.
  SymmetricEigen out{es.eigenvectors().rowwise().reverse(),
                     es.eigenvalues().reverse()};
  normalize_signs(out.R);
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace matbandit::linalg
