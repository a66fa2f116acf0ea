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

namespace matbandit::linalg {

/// Thin SVD A = U diag(s) V^T with descending singular values.
struct Svd {
  Matrix U;
  Vector s;
  Matrix V;
};

/// Full thin SVD of a dense matrix. The first nonzero entry of each left
/// singular vector is made positive; the paired right vector follows.
Svd thin_svd(const Matrix& a);

/// Leading `k` singular triplets of `a` (sign-normalized as in thin_svd).
Svd truncated_svd(const Matrix& a, int k);

/// Orthonormal basis of the column space of a full-column-rank `a` via thin
/// Householder QR, with the diagonal of R forced positive.
Matrix orthonormalize(const Matrix& a);

/// Symmetric eigendecomposition G = R diag(d) R^T of a PSD matrix with
/// eigenvalues in descending order and sign-normalized eigenvectors.
struct SymmetricEigen {
  Matrix R;
  Vector d;
};
SymmetricEigen symmetric_eigen(const Matrix& g);

/// Flip column signs of `u` (and matching columns of `v`, if given) so the
/// first entry with |x| > tiny in each column of `u` is positive.
void normalize_signs(Matrix& u, Matrix* v = nullptr);

/// Largest absolute entry of A - B.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace matbandit::linalg
