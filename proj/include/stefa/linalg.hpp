// Copyright 2026 The stefa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <vector>

#include "stefa/tensor.hpp"

namespace stefa {

/// Flips column signs so that each column's largest-magnitude entry is
/// positive (first such entry on ties). Returns the applied +-1 factors.
Vector fix_column_signs(Matrix& m);

/// Top-r left singular vectors from a full thin SVD, sign-normalized.
///
/// Under exactly tied singular values the returned basis of the tied block
/// follows the factorization's internal ordering and is not unique.
Matrix top_left_singular_vectors(const Matrix& mat, std::size_t r);

/// Top-r left singular vectors of the mode-m unfolding of `t`.
///
/// Small unfoldings go through top_left_singular_vectors. Large ones use the
/// eigenvectors of the mode Gram matrix accumulated by the SIMD kernels, which
/// returns the same subspace whenever the r-th singular gap is not tiny.
Matrix leading_mode_subspace(const DenseTensor& t, std::size_t mode, std::size_t r);

/// Eigenvalues of a symmetric matrix in non-increasing order.
std::vector<double> eigenvalues_symmetric(const Matrix& mat);

struct SymmetricEigen {
  Vector values;   // non-increasing
  Matrix vectors;  // matching columns, sign-normalized
};
SymmetricEigen symmetric_eigen_descending(const Matrix& mat);

/// Orthonormal basis of the column space. Rank is the number of singular
/// values above rel_tol * sigma_max.
Matrix orthonormal_column_basis(const Matrix& mat, double rel_tol = 1e-10);

/// Moore-Penrose inverse with singular values below rel_tol * sigma_max
/// treated as zero.
Matrix pseudo_inverse(const Matrix& mat, double rel_tol = 1e-12);

/// Householder QR with the thin Q and R (R diagonal made positive).
struct ThinQr {
  Matrix q;
  Matrix r;
};
ThinQr thin_qr(const Matrix& mat);

/// Frobenius sin-theta distance between the column spaces of a_hat and
/// a_true: sqrt(R - ||U^T U_hat||_F^2), evaluated as the norm of the residual
/// of U after projecting onto span(a_hat). Missing dimensions in a_hat count
/// as right angles.
double sin_theta_distance(const Matrix& a_hat, const Matrix& a_true);

}  // namespace stefa
