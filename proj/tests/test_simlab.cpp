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
#include <sstream>
#include <vector>

#include "doctest.h"
#include "stefa/error.hpp"
#include "stefa/experiments.hpp"
#include "stefa/simlab.hpp"
#include "test_support.hpp"

using namespace stefa;

namespace {

SimConfig small_config(std::uint64_t seed) {
  SimConfig c;
  c.dims = {30, 25, 20};
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("generator is deterministic") {
  const SimInstance a = generate(small_config(3));
  const SimInstance b = generate(small_config(3));
  CHECK(a.y == b.y);
  CHECK(a.core == b.core);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(a.a[m] == b.a[m]);
    CHECK(a.x[m] == b.x[m]);
  }
  CHECK(!(generate(small_config(4)).y == a.y));
}

TEST_CASE("generator structure") {
  for (Scheme scheme : {Scheme::additive, Scheme::multiplicative}) {
    SimConfig c = small_config(5);
    c.scheme = scheme;
    c.tau = 0.6;
    const SimInstance s = generate(c);
    CHECK((s.y - s.signal - s.noise).frobenius_norm() <= 1e-12 * s.y.frobenius_norm());
    std::vector<std::optional<Matrix>> mats(s.a.begin(), s.a.end());
    CHECK((multi_mode_product(s.core, mats) - s.signal).frobenius_norm() <=
          1e-10 * s.signal.frobenius_norm());
    BasisSpec truth;
    truth.degree = c.j_star;
    for (std::size_t m = 0; m < 3; ++m) {
      const Matrix& a = s.a[m];
      CHECK((a.transpose() * a - Matrix::Identity(3, 3)).norm() <= 1e-10);
      CHECK((s.g[m] + s.gamma[m] - a).norm() <= 1e-10);
      CHECK(s.x[m].minCoeff() >= 0.0);
      CHECK(s.x[m].maxCoeff() <= 1.0);
      // Gamma before the final QR: orthogonal to the true sieve span, columns of norm tau.
      const Matrix phi = design_matrix(truth, s.x[m]);
      CHECK((phi.transpose() * s.gamma_pre_qr[m]).norm() <= 1e-10 * phi.norm());
      for (Eigen::Index r = 0; r < 3; ++r) {
        CHECK(s.gamma_pre_qr[m].col(r).norm() == doctest::Approx(0.6).epsilon(1e-12));
      }
      if (scheme == Scheme::additive) {
        const SieveDesign d = build_design(s.x[m], truth);
        CHECK((projector_apply(d, s.g[m]) - s.g[m]).norm() <= 1e-10);
      }
      // The true loading functions reproduce G on the sampled covariates.
      const double root = std::sqrt(static_cast<double>(c.dims[m]));
      for (Eigen::Index i = 0; i < s.x[m].rows(); i += 7) {
        const std::vector<double> xi{s.x[m](i, 0), s.x[m](i, 1)};
        CHECK((s.functions[m](xi) - root * s.g[m].row(i).transpose()).norm() <= 1e-10 * root);
      }
    }
  }
}

TEST_CASE("core scaling hits the signal strength exactly") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SimConfig c = small_config(seed);
    c.alpha = 0.7;
    const SimInstance s = generate(c);
    const double target = std::pow(20.0, 0.7);
    CHECK(std::abs(lambda_min(s.core) - target) <= 1e-8 * target);
    // Direct oracle: smallest third singular value over unfoldings.
    double direct = 1e300;
    for (std::size_t m = 0; m < 3; ++m) {
      const Eigen::JacobiSVD<Matrix> svd(matricize(s.core, m));
      direct = std::min(direct, svd.singularValues()(2));
    }
    CHECK(std::abs(direct - target) <= 1e-8 * target);
  }
  SimConfig zero = small_config(1);
  zero.alpha = 0.0;
  CHECK(std::abs(lambda_min(generate(zero).core) - 1.0) <= 1e-8);
}

TEST_CASE("no orthogonal part at tau = 0") {
  const SimInstance s = generate(small_config(6));
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(s.gamma[m].norm() <= 1e-12);
    CHECK(sin_theta_distance(s.a[m], s.g[m]) <= 1e-10);
  }
}

TEST_CASE("configuration errors") {
  SimConfig c = small_config(1);
  c.dims = {10, 10, 10};
  c.j_star = 5;  // 1 + 2 * 5 = 11 > 10
  CHECK_THROWS_AS(generate(c), ArgumentError);
  c = small_config(1);
  c.kappa = 1.0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = small_config(1);
  c.alpha = -0.1;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  CHECK(parse_scheme("multiplicative") == Scheme::multiplicative);
  CHECK_THROWS_AS(parse_scheme("mixed"), ArgumentError);
}

TEST_CASE("subspace loss") {
  Rng rng(7);
  const Matrix a = test::random_matrix(rng, 12, 3);
  CHECK(loss_subspace(a * test::random_orthonormal(rng, 3, 3), a) <= 1e-10);
  Matrix e = Matrix::Zero(6, 3);
  Matrix f = Matrix::Zero(6, 3);
  for (int k = 0; k < 3; ++k) {
    e(k, k) = 1.0;
    f(k + 3, k) = 1.0;
  }
  CHECK(loss_subspace(f, e) == doctest::Approx(std::sqrt(3.0)));
  Matrix h(2, 1), t(2, 1);
  h << std::cos(M_PI / 6), std::sin(M_PI / 6);
  t << 1, 0;
  CHECK(loss_subspace(h, t) == doctest::Approx(0.5));
  // Rank-deficient estimate: the missing direction counts as a right angle.
  Matrix deficient = e;
  deficient.col(2) = e.col(0);
  CHECK(loss_subspace(deficient, e) == doctest::Approx(1.0));
  for (int trial = 0; trial < 20; ++trial) {
    const double l = loss_subspace(test::random_matrix(rng, 10, 3), test::random_matrix(rng, 10, 3));
    CHECK(l >= 0.0);
    CHECK(l <= std::sqrt(3.0) + 1e-12);
  }
  CHECK_THROWS_AS(loss_subspace(Matrix::Zero(5, 2), Matrix::Zero(6, 2)), ArgumentError);
}

TEST_CASE("ReMSE") {
  Rng rng(8);
  const DenseTensor s = test::random_tensor(rng, {3, 4, 5});
  CHECK(loss_remse(s, s) == 0.0);
  CHECK(loss_remse(DenseTensor({3, 4, 5}), s) == doctest::Approx(1.0));
  CHECK(loss_remse(2.0 * s, s) == doctest::Approx(1.0));
  CHECK(loss_remse_squared(0.5 * s, s) == doctest::Approx(0.25));
  CHECK_THROWS_AS(loss_remse(s, DenseTensor({3, 4, 5})), ArgumentError);
  CHECK_THROWS_AS(loss_remse(DenseTensor({3, 4, 4}), s), ArgumentError);
}

TEST_CASE("function loss") {
  CHECK(default_grid_size(1) == 10000);
  CHECK(default_grid_size(2) == 100);
  CHECK(default_grid_size(3) == 22);
  const ScalarFunction g = [](std::span<const double> x) { return std::sin(3.0 * x[0]) + x[1]; };
  const ScalarFunction neg = [&](std::span<const double> x) { return -g(x); };
  const ScalarFunction zero = [](std::span<const double>) { return 0.0; };
  CHECK(loss_function(g, g, 2) == 0.0);
  CHECK(loss_function(neg, g, 2) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK(loss_function(zero, g, 2) == 1.0);
  try {
    loss_function(g, zero, 2);
    FAIL("expected an error");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("degenerate true function") != std::string::npos);
  }
  // Direct midpoint-rule oracle for a scaled estimate.
  const ScalarFunction half = [&](std::span<const double> x) { return 0.5 * g(x); };
  CHECK(loss_function(half, g, 2) == doctest::Approx(0.25).epsilon(1e-12));
  const ScalarFunction shifted = [&](std::span<const double> x) { return g(x) + 0.1; };
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 50; ++i) {
    for (int k = 0; k < 50; ++k) {
      const std::vector<double> x{(i + 0.5) / 50.0, (k + 0.5) / 50.0};
      num += 0.01;
      den += g(x) * g(x);
    }
  }
  CHECK(loss_function(shifted, g, 2, 50) == doctest::Approx(num / den).epsilon(1e-10));
}

TEST_CASE("fitted loading functions against the truth") {
  SimConfig c = small_config(9);
  const SimInstance s = generate(c);
  BasisSpec spec;
  spec.degree = c.j_star;
  // Exact sieve coefficients of g*, fitted on a dense grid.
  const std::size_t n = 60;
  Matrix grid(static_cast<Eigen::Index>(n * n), 2);
  Matrix target(grid.rows(), 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = static_cast<Eigen::Index>(i * n + k);
      grid(row, 0) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      grid(row, 1) = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      const std::vector<double> x{grid(row, 0), grid(row, 1)};
      target.row(row) = s.functions[0](x).transpose();
    }
  }
  const Matrix b = pseudo_inverse(design_matrix(spec, grid)) * target;
  const FunctionLosses exact = function_losses(spec, b, s.functions[0]);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(exact.aligned[r] <= 1e-12);
    CHECK(exact.best_linear[r] <= 1e-12);
  }
  const Matrix flipped = -b;
  CHECK(function_losses(spec, flipped, s.functions[0]).aligned[1] <= 1e-12);
  const FunctionLosses none = function_losses(spec, Matrix::Zero(b.rows(), 3), s.functions[0]);
  CHECK(none.aligned[0] == doctest::Approx(1.0));
  // Rotating the columns breaks per-column alignment but not the best linear fit.
  Rng rng(10);
  const Matrix rotated = b * test::random_orthonormal(rng, 3, 3);
  const FunctionLosses rot = function_losses(spec, rotated, s.functions[0]);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(rot.best_linear[r] <= 1e-10);
    CHECK(rot.best_linear[r] <= rot.aligned[r] + 1e-12);
  }
}

TEST_CASE("noise amplification refit") {
  const auto p = test::planted_model(11, {20, 20, 20}, {2, 2, 2}, 0.0);
  Rng rng(12);
  const DenseTensor e = test::random_tensor(rng, {20, 20, 20});
  const std::vector<double> amps{0.0, 1.0};
  const auto rows = noise_amplify_refit(p.y, e, p.designs, TuckerRanks{{2, 2, 2}}, amps);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].amplifier == 0.0);
  CHECK(rows[0].stefa <= 1e-12);
  CHECK(rows[0].hooi <= 1e-12);
  CHECK(rows[1].stefa > rows[0].stefa);
  CHECK_THROWS_AS(noise_amplify_refit(p.y, DenseTensor({20, 20, 19}), p.designs,
                                      TuckerRanks{{2, 2, 2}}, amps),
                  ArgumentError);
}

TEST_CASE("experiment results do not depend on the thread count") {
  ExperimentSpec spec;
  spec.protocol = "table1";
  spec.reps = 3;
  spec.seed = 99;
  spec.cells = {"alpha=0.5,I=100"};
  spec.iteration.max_iter = 5;
  spec.threads = 1;
  const ExperimentResult one = run_experiment(spec);
  spec.threads = 3;
  const ExperimentResult three = run_experiment(spec);
  std::ostringstream a, b;
  write_values_csv(a, one);
  write_values_csv(b, three);
  CHECK(a.str() == b.str());
  CHECK(one.mean("alpha=0.5,I=100", "ipsvd", "l2_A1") > 0.0);
  CHECK_THROWS_AS(one.mean("alpha=0.5,I=100", "ipsvd", "nope"), ArgumentError);
  std::ostringstream summary;
  write_summary_csv(summary, one);
  CHECK(summary.str().rfind("cell,method,metric,mean,sd,reps\n", 0) == 0);
}

TEST_CASE("experiment specs") {
  ExperimentSpec bad;
  bad.protocol = "table9";
  CHECK_THROWS_AS(run_experiment(bad), ArgumentError);
  CHECK_THROWS_AS(protocol_cells("table9"), ArgumentError);
  ExperimentSpec unknown_cell;
  unknown_cell.cells = {"alpha=0.9,I=100"};
  CHECK_THROWS_AS(run_experiment(unknown_cell), ArgumentError);

  const ExperimentSpec s = parse_experiment_spec(
      R"({"protocol": "table4_gamma_sweep", "reps": 4, "seed": 7, "cells": ["tau=1"], "kappa": 0.3})");
  CHECK(s.protocol == "table4_gamma_sweep");
  CHECK(s.reps == 4);
  CHECK(s.seed == 7);
  CHECK(s.cells == std::vector<std::string>{"tau=1"});
  CHECK(*s.kappa == 0.3);
  CHECK_THROWS_AS(parse_experiment_spec("{"), ArgumentError);
  CHECK_THROWS_AS(parse_experiment_spec(R"({"reps": "many"})"), ArgumentError);
  for (const auto& name : protocol_names()) CHECK(!protocol_cells(name).empty());
}
