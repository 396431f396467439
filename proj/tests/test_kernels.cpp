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
#include <vector>

#include "doctest.h"
#include "stefa/kernels.hpp"
#include "stefa/rng.hpp"
#include "stefa/tensor.hpp"
#include "test_support.hpp"

using namespace stefa;
namespace k = stefa::kernels;

namespace {

std::vector<double> draw(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// Reassociation bound for a length-n sum of products.
double dot_tol(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] * y[i]);
  return 1e-15 * static_cast<double>(x.size() + 4) * s + 1e-300;
}

const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 64, 100, 1023, 4099};

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(k::scalar_table().isa == k::Isa::scalar);
  CHECK(k::select(k::Isa::scalar));
  CHECK(k::active().isa == k::Isa::scalar);
}

TEST_CASE("simd variants agree with the scalar reference") {
  const k::KernelTable& ref = k::scalar_table();
  std::vector<const k::KernelTable*> variants;
  if (const k::KernelTable* t = k::avx2_table()) variants.push_back(t);
  if (variants.empty()) {
    MESSAGE("no SIMD variant available on this CPU; only the scalar path is exercised");
  }
  Rng rng(11);
  for (const k::KernelTable* v : variants) {
    for (std::size_t n : kLengths) {
      CAPTURE(n);
      const auto x = draw(rng, n);
      std::vector<std::vector<double>> ys;
      for (int j = 0; j < 4; ++j) ys.push_back(draw(rng, n));
      const double* yp[4] = {ys[0].data(), ys[1].data(), ys[2].data(), ys[3].data()};

      CHECK(std::abs(v->dot(x.data(), ys[0].data(), n) - ref.dot(x.data(), ys[0].data(), n)) <=
            dot_tol(x, ys[0]));
      CHECK(std::abs(v->sum_squares(x.data(), n) - ref.sum_squares(x.data(), n)) <=
            dot_tol(x, x));

      double a[4], b[4];
      v->dot4(x.data(), yp, n, a);
      ref.dot4(x.data(), yp, n, b);
      for (int j = 0; j < 4; ++j) CHECK(std::abs(a[j] - b[j]) <= dot_tol(x, ys[j]));

      std::vector<double> y1 = ys[0], y2 = ys[0];
      v->axpy(0.75, x.data(), y1.data(), n);
      ref.axpy(0.75, x.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

      const double alphas[4] = {0.5, -1.25, 2.0, 0.125};
      std::vector<double> z1 = x, z2 = x;
      v->axpy4(alphas, yp, z1.data(), n);
      ref.axpy4(alphas, yp, z2.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        const double scale = std::abs(x[i]) + std::abs(ys[0][i]) + std::abs(ys[1][i]) +
                             std::abs(ys[2][i]) + std::abs(ys[3][i]);
        CHECK(std::abs(z1[i] - z2[i]) <= 1e-15 * 8 * scale);
      }
    }
  }
}

TEST_CASE("tensor contractions agree across kernel variants") {
  const k::KernelTable* simd = k::avx2_table();
  if (simd == nullptr) return;
  Rng rng(5);
  const DenseTensor t = test::random_tensor(rng, {13, 17, 19});
  const Matrix a = test::random_matrix(rng, 4, 17);
  const Matrix b = test::random_matrix(rng, 3, 19);

  REQUIRE(k::select(k::Isa::scalar));
  const DenseTensor p_ref = mode_product(mode_product(t, a, 1), b, 2);
  const Matrix g_ref = mode_gram(t, 0);
  REQUIRE(k::select(k::Isa::avx2));
  const DenseTensor p_simd = mode_product(mode_product(t, a, 1), b, 2);
  const Matrix g_simd = mode_gram(t, 0);

  CHECK((p_simd - p_ref).frobenius_norm() <= 1e-13 * p_ref.frobenius_norm());
  CHECK((g_simd - g_ref).norm() <= 1e-13 * g_ref.norm());
}
