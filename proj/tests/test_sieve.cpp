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
#include "stefa/error.hpp"
#include "stefa/sieve.hpp"
#include "test_support.hpp"

using namespace stefa;

namespace {

Matrix projector(const SieveDesign& d) { return d.basis * d.basis.transpose(); }

}  // namespace

TEST_CASE("Legendre polynomials") {
  CHECK(legendre_eval(0, 0.7) == 1.0);
  CHECK(legendre_eval(1, 0.7) == 0.7);
  CHECK(legendre_eval(2, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(legendre_eval(2, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
  for (std::size_t j = 0; j < 12; ++j) {
    CHECK(legendre_eval(j, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(legendre_eval(j, -1.0) == doctest::Approx(j % 2 == 0 ? 1.0 : -1.0).epsilon(1e-13));
  }
  // Degree 5 expanded by hand from the recurrence.
  const auto p5 = [](double u) { return (63.0 * std::pow(u, 5) - 70.0 * std::pow(u, 3) + 15.0 * u) / 8.0; };
  for (double u : {-0.9, -0.3, 0.0, 0.3, 0.55, 1.0, 1.5}) {
    CHECK(std::abs(legendre_eval(5, u) - p5(u)) <= 1e-13 * std::max(1.0, std::abs(p5(u))));
  }
}

TEST_CASE("Legendre basis is orthogonal on [-1, 1]") {
  // Midpoint rule on a fine grid.
  const int n = 20000;
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = 0; b < 5; ++b) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double u = -1.0 + (i + 0.5) * 2.0 / n;
        s += legendre_eval(a, u) * legendre_eval(b, u) * 2.0 / n;
      }
      const double expected = a == b ? 2.0 / (2.0 * static_cast<double>(a) + 1.0) : 0.0;
      CHECK(s == doctest::Approx(expected).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("design matrix layout") {
  Matrix x(3, 1);
  x << 0.0, 0.5, 1.0;
  BasisSpec spec;
  spec.degree = 1;
  const SieveDesign d = build_design(x, spec);
  Matrix expected(3, 2);
  expected << 1, -1, 1, 0, 1, 1;
  CHECK((d.phi - expected).norm() == 0.0);
  CHECK(d.rank() == 2);

  BasisSpec five;
  five.degree = 5;
  CHECK(five.basis_count(2) == 11);
  Rng rng(1);
  const SieveDesign d11 = build_design(test::random_uniform(rng, 40, 2), five);
  CHECK(d11.basis_count() == 11);
  // Covariate-major: column 1 + (d * degree) + (j - 1) holds P_j of covariate d.
  const double u = 2.0 * d11.covariates(4, 1) - 1.0;
  CHECK(d11.phi(4, 1 + 5 + 2) == doctest::Approx(legendre_eval(3, u)));

  BasisSpec no_int;
  no_int.degree = 3;
  no_int.intercept = false;
  CHECK(no_int.basis_count(2) == 6);
  CHECK(build_design(test::random_uniform(rng, 10, 2), no_int).phi.cols() == 6);
}

TEST_CASE("projector is a symmetric idempotent containing Phi") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rows = static_cast<Eigen::Index>(20 + (trial * 7) % 81);
    const auto dcov = static_cast<Eigen::Index>(1 + trial % 3);
    BasisSpec spec;
    spec.degree = 1 + static_cast<std::size_t>(trial % 5);
    const SieveDesign d = build_design(test::random_uniform(rng, rows, dcov), spec);
    const Matrix p = projector(d);
    CHECK((p * p - p).norm() <= 1e-10);
    CHECK((p - p.transpose()).norm() <= 1e-12);
    CHECK((p * d.phi - d.phi).norm() <= 1e-10 * std::max(1.0, d.phi.norm()));
    CHECK((d.basis.transpose() * d.basis - Matrix::Identity(d.basis.cols(), d.basis.cols())).norm() <= 1e-12);

    const Matrix mat = test::random_matrix(rng, rows, 3);
    const Matrix pm = projector_apply(d, mat);
    CHECK((pm - p * mat).norm() <= 1e-12 * mat.norm());
    CHECK((projector_apply(d, pm) - pm).norm() <= 1e-10);
    CHECK(pm.norm() <= mat.norm() + 1e-12);
    const Matrix inside = d.phi * test::random_matrix(rng, d.phi.cols(), 2);
    CHECK((projector_apply(d, inside) - inside).norm() <= 1e-10 * inside.norm());
    const Matrix outside = complement_apply(d, mat);
    CHECK(projector_apply(d, outside).norm() <= 1e-10);
  }
  Rng r3(3);
  const SieveDesign d = build_design(test::random_uniform(r3, 10, 1), BasisSpec{});
  CHECK_THROWS_AS(projector_apply(d, Matrix::Zero(9, 2)), ArgumentError);
}

TEST_CASE("collinear designs keep a valid projector") {
  Rng rng(4);
  Matrix x = test::random_uniform(rng, 30, 2);
  x.col(1) = x.col(0);  // duplicated covariate
  BasisSpec spec;
  spec.degree = 3;
  const SieveDesign d = build_design(x, spec);
  CHECK(d.rank() == 4);
  // Reference: orthonormalize the maximal independent subset [1, P1..P3 of x1].
  const Matrix subset = d.phi.leftCols(4);
  const Eigen::HouseholderQR<Matrix> qr(subset);
  const Matrix q = qr.householderQ() * Matrix::Identity(30, 4);
  CHECK((projector(d) - q * q.transpose()).norm() <= 1e-10);

  Matrix constant = Matrix::Constant(12, 1, 0.4);
  const SieveDesign dc = build_design(constant, spec);
  CHECK(dc.rank() == 1);
  CHECK((projector(dc) - Matrix::Constant(12, 12, 1.0 / 12.0)).norm() <= 1e-12);
}

TEST_CASE("affine domain mapping") {
  Rng rng(5);
  const Matrix x = test::random_uniform(rng, 25, 2);
  BasisSpec spec;
  spec.degree = 4;
  const SieveDesign base = build_design(x, spec);

  BasisSpec shifted = spec;
  shifted.domains = {Interval{3.0, 5.0}, Interval{-1.0, 0.0}};
  Matrix xs = x;
  xs.col(0) = (2.0 * x.col(0).array() + 3.0).matrix();
  xs.col(1) = (x.col(1).array() - 1.0).matrix();
  CHECK((build_design(xs, shifted).phi - base.phi).norm() <= 1e-12 * base.phi.norm());

  BasisSpec wrong = spec;
  wrong.domains = {Interval{0.0, 1.0}};
  CHECK_THROWS_AS(build_design(x, wrong), ArgumentError);
  wrong.domains = {Interval{0.0, 1.0}, Interval{1.0, 1.0}};
  CHECK_THROWS_AS(build_design(x, wrong), ArgumentError);
}

TEST_CASE("build_design errors") {
  BasisSpec spec;
  spec.degree = 5;
  try {
    build_design(Matrix::Constant(10, 2, 0.5), spec);
    FAIL("expected an error");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("sieve dimension exceeds mode extent") != std::string::npos);
  }
  Matrix bad = Matrix::Constant(20, 1, 0.5);
  bad(3, 0) = std::nan("");
  CHECK_THROWS_AS(build_design(bad, spec), ArgumentError);
}

TEST_CASE("parse_basis") {
  CHECK(parse_basis("legendre").degree == 4);
  const BasisSpec b = parse_basis("bspline:6");
  CHECK(b.family == BasisFamily::bspline);
  CHECK(b.degree == 6);
  CHECK(to_string(b) == "bspline:6");
  CHECK_THROWS_AS(parse_basis("fourier:3"), ArgumentError);
  CHECK_THROWS_AS(parse_basis("legendre:0"), ArgumentError);
  CHECK_THROWS_AS(parse_basis("legendre:3x"), ArgumentError);
}

TEST_CASE("B-spline functions with the intercept span partitions of unity") {
  // The full cubic spline space contains the constants, and the dropped
  // first function is 1 minus the sum of the others.
  for (std::size_t n : {3u, 5u, 8u}) {
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = bspline_eval(j, n, t);
        CHECK(v >= -1e-15);
        s += v;
      }
      CHECK(s <= 1.0 + 1e-12);
    }
    CHECK(bspline_eval(n - 1, n, 1.0) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(bspline_eval(5, 5, 0.5), ArgumentError);
  Rng rng(6);
  BasisSpec spec = parse_basis("bspline:6");
  const SieveDesign d = build_design(test::random_uniform(rng, 50, 1), spec);
  CHECK(d.rank() == 7);
}

TEST_CASE("eval_loading_function") {
  BasisSpec spec;
  spec.degree = 3;
  const std::vector<double> x{0.2, 0.9};
  CHECK(eval_loading_function(spec, Matrix::Zero(7, 2), x).norm() == 0.0);

  Matrix b = Matrix::Zero(7, 2);
  b(0, 0) = 1.5;
  b(0, 1) = -2.0;
  for (double a : {0.0, 0.4, 1.0}) {
    const std::vector<double> xa{a, 1.0 - a};
    const Vector v = eval_loading_function(spec, b, xa);
    CHECK(v(0) == 1.5);
    CHECK(v(1) == -2.0);
  }
  CHECK_THROWS_AS(eval_loading_function(spec, Matrix::Zero(6, 2), x), ArgumentError);

  // Planted additive g(x) = c0 + sum_d sum_j c_dj P_j(2 x_d - 1), evaluated directly.
  Rng rng(7);
  const Matrix coeffs = test::random_matrix(rng, 7, 2);
  for (int i = 0; i < 11; ++i) {
    for (int k = 0; k < 11; ++k) {
      const std::vector<double> xi{i / 10.0, k / 10.0};
      for (Eigen::Index r = 0; r < 2; ++r) {
        double direct = coeffs(0, r);
        for (std::size_t d = 0; d < 2; ++d) {
          for (std::size_t j = 1; j <= 3; ++j) {
            direct += coeffs(static_cast<Eigen::Index>(1 + d * 3 + j - 1), r) *
                      legendre_eval(j, 2.0 * xi[d] - 1.0);
          }
        }
        CHECK(std::abs(eval_loading_function(spec, coeffs, xi)(r) - direct) <= 1e-10);
      }
    }
  }
}

TEST_CASE("sieve coefficients recover planted B") {
  Rng rng(8);
  BasisSpec spec;
  spec.degree = 3;
  const SieveDesign d = build_design(test::random_uniform(rng, 60, 2), spec);
  const Matrix b = test::random_matrix(rng, 7, 3);
  CHECK((sieve_coefficients(d, d.phi * b) - b).norm() <= 1e-10 * b.norm());
  CHECK_THROWS_AS(sieve_coefficients(d, Matrix::Zero(59, 3)), ArgumentError);
}
