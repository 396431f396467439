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

#include "stefa/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "stefa/error.hpp"

namespace stefa {

Vector fix_column_signs(Matrix& m) {
  Vector flips = Vector::Ones(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double a = std::abs(m(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (m.rows() > 0 && m(best, j) < 0.0) {
      m.col(j) *= -1.0;
      flips(j) = -1.0;
    }
  }
  return flips;
}

namespace {

void check_finite(const Matrix& mat, const char* what) {
  if (!mat.allFinite()) throw ArgumentError(std::string(what) + ": non-finite input");
}

Matrix thin_u(const Matrix& mat) {
  if (mat.rows() <= 64 && mat.cols() <= 64) {
    Eigen::JacobiSVD<Matrix> svd(mat, Eigen::ComputeThinU);
    return svd.matrixU();
  }
  Eigen::BDCSVD<Matrix> svd(mat, Eigen::ComputeThinU);
  return svd.matrixU();
}

}  // namespace

Matrix top_left_singular_vectors(const Matrix& mat, std::size_t r) {
  check_finite(mat, "top_left_singular_vectors");
  const auto rows = static_cast<std::size_t>(mat.rows());
  const auto cols = static_cast<std::size_t>(mat.cols());
  if (r == 0 || r > std::min(rows, cols)) {
    throw ArgumentError("requested " + std::to_string(r) + " singular vectors of a " +
                        std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  }
  Matrix u = thin_u(mat).leftCols(static_cast<Eigen::Index>(r));
  fix_column_signs(u);
  return u;
}

Matrix leading_mode_subspace(const DenseTensor& t, std::size_t mode, std::size_t r) {
  const std::size_t rows = t.dim(mode);
  const std::size_t cols = t.size() / rows;
  if (r == 0 || r > std::min(rows, cols)) {
    throw ArgumentError("requested " + std::to_string(r) + " singular vectors of mode " +
                        std::to_string(mode + 1) + " unfolding");
  }
  constexpr std::size_t kDirectLimit = 1u << 20;
  if (t.size() <= kDirectLimit || cols <= rows) {
    return top_left_singular_vectors(matricize(t, mode), r);
  }
  const SymmetricEigen eig = symmetric_eigen_descending(mode_gram(t, mode));
  Matrix u = eig.vectors.leftCols(static_cast<Eigen::Index>(r));
  fix_column_signs(u);
  return u;
}

SymmetricEigen symmetric_eigen_descending(const Matrix& mat) {
  if (mat.rows() != mat.cols()) throw ArgumentError("symmetric eigen: matrix is not square");
  check_finite(mat, "symmetric eigen");
  const double scale = mat.cwiseAbs().maxCoeff();
  if (mat.size() > 0 && (mat - mat.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1e-300)) {
    throw ArgumentError("symmetric eigen: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(mat);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigendecomposition failed");
  const Eigen::Index n = mat.rows();
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  fix_column_signs(out.vectors);
  return out;
}

std::vector<double> eigenvalues_symmetric(const Matrix& mat) {
  if (mat.rows() != mat.cols()) throw ArgumentError("eigenvalues_symmetric: matrix is not square");
  check_finite(mat, "eigenvalues_symmetric");
  const double scale = mat.size() ? mat.cwiseAbs().maxCoeff() : 0.0;
  if (mat.size() > 0 && (mat - mat.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1e-300)) {
    throw ArgumentError("eigenvalues_symmetric: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(mat, Eigen::EigenvaluesOnly);
  std::vector<double> vals(static_cast<std::size_t>(mat.rows()));
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    vals[static_cast<std::size_t>(i)] = es.eigenvalues()(mat.rows() - 1 - i);
  }
  return vals;
}

Matrix orthonormal_column_basis(const Matrix& mat, double rel_tol) {
  check_finite(mat, "orthonormal_column_basis");
  if (mat.size() == 0) return Matrix(mat.rows(), 0);
  Eigen::BDCSVD<Matrix> svd(mat, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return Matrix(mat.rows(), 0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > rel_tol * s(0)) ++rank;
  Matrix u = svd.matrixU().leftCols(rank);
  fix_column_signs(u);
  return u;
}

Matrix pseudo_inverse(const Matrix& mat, double rel_tol) {
  check_finite(mat, "pseudo_inverse");
  Eigen::BDCSVD<Matrix> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Vector inv = Vector::Zero(s.size());
  const double cutoff = s.size() ? rel_tol * s(0) : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

ThinQr thin_qr(const Matrix& mat) {
  check_finite(mat, "thin_qr");
  const Eigen::Index k = std::min(mat.rows(), mat.cols());
  Eigen::HouseholderQR<Matrix> qr(mat);
  Matrix q = qr.householderQ() * Matrix::Identity(mat.rows(), k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) *= -1.0;
      q.col(j) *= -1.0;
    }
  }
  return {std::move(q), std::move(r)};
}

double sin_theta_distance(const Matrix& a_hat, const Matrix& a_true) {
  if (a_hat.rows() != a_true.rows()) throw ArgumentError("sin_theta_distance: row counts differ");
  const Matrix u = orthonormal_column_basis(a_true);
  const Matrix u_hat = orthonormal_column_basis(a_hat);
  if (u_hat.cols() == 0) return std::sqrt(static_cast<double>(u.cols()));
  const Matrix resid = u - u_hat * (u_hat.transpose() * u);
  return resid.norm();
}

}  // namespace stefa
