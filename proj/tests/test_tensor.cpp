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


#include <cmath>
#include <optional>
#include <sstream>

#include "doctest.h"
#include "stefa/error.hpp"
#include "stefa/linalg.hpp"
#include "stefa/tensor.hpp"
#include "test_support.hpp"

using namespace stefa;

namespace {

// Kronecker product with the first factor's index varying slowest.
Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("matricize follows the mode-1 index formula") {
  DenseTensor t({2, 2, 2});
  t({0, 0, 0}) = 1.0;
  const Matrix m = matricize(t, 0);
  CHECK(m(0, 0) == 1.0);
  CHECK(m.sum() == 1.0);

  DenseTensor s({2, 3, 4});
  s({0, 1, 2}) = 7.0;  // s_{1,2,3}
  const Matrix m1 = matricize(s, 0);
  // 1-based column 2 + (3 - 1) * 3 = 8, i.e. 0-based 7.
  CHECK(m1(0, 7) == 7.0);
  CHECK(m1.cwiseAbs().sum() == 7.0);
}

TEST_CASE("matricize of modes 2 and 3 cycles the remaining modes ascending") {
  DenseTensor s({2, 3, 4});
  s({1, 2, 3}) = 5.0;
  // mode 2: column i1 + i3 * I1; mode 3: column i1 + i2 * I1.
  CHECK(matricize(s, 1)(2, 1 + 3 * 2) == 5.0);
  CHECK(matricize(s, 2)(3, 1 + 2 * 2) == 5.0);
}

TEST_CASE("matricize and tensorize round trip exactly") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseTensor t = test::random_tensor(rng, {3, 4, 5});
    for (std::size_t m = 0; m < 3; ++m) {
      CHECK(tensorize(matricize(t, m), m, t.dims()) == t);
      CHECK(std::abs(matricize(t, m).norm() - t.frobenius_norm()) <=
            1e-12 * t.frobenius_norm());
    }
  }
  CHECK(tensorize(Matrix::Zero(3, 20), 0, {3, 4, 5}) == DenseTensor({3, 4, 5}));
  Matrix row(1, 6);
  row << 1, 2, 3, 4, 5, 6;
  const DenseTensor r = tensorize(row, 0, {1, 2, 3});
  CHECK(r({0, 1, 0}) == 2.0);
  CHECK(r({0, 0, 2}) == 5.0);
  CHECK_THROWS_AS(tensorize(Matrix::Zero(3, 19), 0, {3, 4, 5}), ArgumentError);
  CHECK_THROWS_AS(matricize(DenseTensor({2, 2}), 2), ArgumentError);
}

TEST_CASE("mode product identities") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseTensor t = test::random_tensor(rng, {3, 4, 5});
    const Matrix a = test::random_matrix(rng, 6, 3);
    const Matrix b = test::random_matrix(rng, 2, 4);
    const Matrix c = test::random_matrix(rng, 7, 6);
    const double scale = t.frobenius_norm() * a.norm() * b.norm() * c.norm();

    CHECK(mode_product(t, Matrix::Identity(4, 4), 1) == t);
    const DenseTensor ab = mode_product(mode_product(t, a, 0), b, 1);
    const DenseTensor ba = mode_product(mode_product(t, b, 1), a, 0);
    CHECK((ab - ba).frobenius_norm() <= 1e-12 * scale);

    const DenseTensor lhs = mode_product(mode_product(t, a, 0), c, 0);
    const DenseTensor rhs = mode_product(t, c * a, 0);
    CHECK((lhs - rhs).frobenius_norm() <= 1e-12 * scale);

    const Matrix direct = a * matricize(t, 0);
    CHECK((matricize(mode_product(t, a, 0), 0) - direct).norm() <= 1e-12 * scale);
  }
  DenseTensor one({1, 1, 1});
  one({0, 0, 0}) = 3.5;
  CHECK(mode_product(one, Matrix::Constant(1, 1, 2.0), 0)({0, 0, 0}) == 7.0);
  CHECK_THROWS_AS(mode_product(one, Matrix::Identity(2, 2), 0), ArgumentError);
}

TEST_CASE("Kronecker form of the Tucker unfolding") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseTensor f = test::random_tensor(rng, {2, 3, 2});
    const Matrix a1 = test::random_matrix(rng, 4, 2);
    const Matrix a2 = test::random_matrix(rng, 5, 3);
    const Matrix a3 = test::random_matrix(rng, 3, 2);
    const std::vector<std::optional<Matrix>> mats{a1, a2, a3};
    const DenseTensor s = multi_mode_product(f, mats);
    // With the second index varying fastest in the columns, the column factor
    // is kron(A3, A2) in slow-fast order.
    const Matrix expected = a1 * matricize(f, 0) * kron(a3, a2).transpose();
    CHECK((matricize(s, 0) - expected).norm() <= 1e-10 * expected.norm());
  }
}

TEST_CASE("multi_mode_product matches sequential products") {
  Rng rng(4);
  const DenseTensor t = test::random_tensor(rng, {6, 5, 4});
  const Matrix a = test::random_matrix(rng, 2, 6);
  const Matrix c = test::random_matrix(rng, 9, 4);
  const std::vector<std::optional<Matrix>> mats{a, std::nullopt, c};
  const DenseTensor seq = mode_product(mode_product(t, a, 0), c, 2);
  CHECK((multi_mode_product(t, mats) - seq).frobenius_norm() <= 1e-12 * seq.frobenius_norm());
}

TEST_CASE("mode_gram equals the unfolding Gram") {
  Rng rng(5);
  const DenseTensor t = test::random_tensor(rng, {7, 600, 3});
  for (std::size_t m = 0; m < 3; ++m) {
    const Matrix u = matricize(t, m);
    const Matrix g = u * u.transpose();
    CHECK((mode_gram(t, m) - g).norm() <= 1e-12 * g.norm());
  }
}

TEST_CASE("top_left_singular_vectors") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 2, 1;
  const Matrix u = top_left_singular_vectors(d, 2);
  CHECK((u - Matrix::Identity(3, 2)).norm() == 0.0);

  Rng rng(6);
  const Vector a = test::random_matrix(rng, 8, 1).col(0);
  const Vector b = test::random_matrix(rng, 5, 1).col(0);
  const Matrix u1 = top_left_singular_vectors(a * b.transpose(), 1);
  Matrix expected = a / a.norm();
  fix_column_signs(expected);
  CHECK((u1 - expected).norm() <= 1e-12);

  const Matrix r = test::random_matrix(rng, 50, 30);
  const Matrix u5 = top_left_singular_vectors(r, 5);
  CHECK((u5.transpose() * u5 - Matrix::Identity(5, 5)).norm() <= 1e-10);
  for (Eigen::Index k = 0; k < 5; ++k) {
    Eigen::Index idx = 0;
    u5.col(k).cwiseAbs().maxCoeff(&idx);
    CHECK(u5(idx, k) > 0.0);
  }
}

TEST_CASE("leading_mode_subspace agrees between the SVD and Gram paths") {
  Rng rng(7);
  // Unfolding of 40 x 40000 takes the Gram path; compare with a full SVD.
  const DenseTensor t = test::random_tensor(rng, {40, 200, 200});
  const Matrix fast = leading_mode_subspace(t, 0, 3);
  const Matrix full = top_left_singular_vectors(matricize(t, 0), 3);
  CHECK(sin_theta_distance(fast, full) <= 1e-8);
}

TEST_CASE("eigenvalues_symmetric") {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 1, 5;
  const auto ev = eigenvalues_symmetric(d);
  CHECK(ev[0] == doctest::Approx(5.0));
  CHECK(ev[1] == doctest::Approx(1.0));
  for (double v : eigenvalues_symmetric(Matrix::Identity(3, 3))) CHECK(v == doctest::Approx(1.0));
  Rng rng(8);
  const Matrix a = test::random_matrix(rng, 6, 3);
  for (double v : eigenvalues_symmetric(a * a.transpose())) CHECK(v >= -1e-10);
  CHECK_THROWS_AS(eigenvalues_symmetric(Matrix::Zero(2, 3)), ArgumentError);
}

TEST_CASE("sin-theta distance") {
  Rng rng(9);
  const Matrix a = test::random_matrix(rng, 10, 3);
  const Matrix o = test::random_orthonormal(rng, 3, 3);
  CHECK(sin_theta_distance(a * o, a) <= 1e-10);
  Matrix e = Matrix::Zero(6, 3);
  Matrix f = Matrix::Zero(6, 3);
  for (int k = 0; k < 3; ++k) {
    e(k, k) = 1.0;
    f(k + 3, k) = 1.0;
  }
  CHECK(sin_theta_distance(f, e) == doctest::Approx(std::sqrt(3.0)));
  Matrix h(2, 1), t(2, 1);
  h << std::cos(M_PI / 6), std::sin(M_PI / 6);
  t << 1, 0;
  CHECK(sin_theta_distance(h, t) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("Tucker rank validation names the mode") {
  CHECK_NOTHROW((TuckerRanks{{2, 2, 3}}.validate({5, 5, 5})));
  try {
    TuckerRanks{{0, 3, 3}}.validate({5, 5, 5});
    FAIL("expected an error");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("mode 1") != std::string::npos);
  }
  CHECK_THROWS_AS((TuckerRanks{{2, 6, 2}}.validate({5, 5, 5})), ArgumentError);
  CHECK_THROWS_AS((TuckerRanks{{1, 1, 2}}.validate({5, 5, 5})), ArgumentError);
}

TEST_CASE(".tns round trip and parse errors") {
  Rng rng(10);
  const DenseTensor t = test::random_tensor(rng, {2, 3, 4});
  std::stringstream ss;
  write_tns(ss, t);
  CHECK(read_tns(ss) == t);

  std::stringstream short_input("3\n2 2 2\n1 2 3 4 5 6 7\n");
  CHECK_THROWS_AS(read_tns(short_input), ArgumentError);
  std::stringstream long_input("2\n1 2\n1 2 3\n");
  CHECK_THROWS_AS(read_tns(long_input), ArgumentError);
  std::stringstream bad_token("1\n2\n1 x\n");
  CHECK_THROWS_AS(read_tns(bad_token), ArgumentError);
}
