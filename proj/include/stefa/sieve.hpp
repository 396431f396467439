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
#include <string>
#include <vector>

#include "stefa/tensor.hpp"

namespace stefa {

enum class BasisFamily { legendre, bspline };

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Additive sieve basis: an optional intercept followed by `degree` univariate
/// functions per covariate, covariate-major.
struct BasisSpec {
  BasisFamily family = BasisFamily::legendre;
  std::size_t degree = 4;  // functions per covariate
  bool intercept = true;
  std::vector<Interval> domains;  // per covariate; empty means [0, 1] for all

  /// 1 + D * degree with an intercept, D * degree without.
  std::size_t basis_count(std::size_t covariates) const;
  Interval domain(std::size_t d) const;
};

/// Parses "legendre:4" or "bspline:6".
BasisSpec parse_basis(const std::string& text);
std::string to_string(const BasisSpec& spec);

/// Legendre polynomial P_j(u) by the three-term recurrence.
double legendre_eval(std::size_t j, double u);

/// j-th of n cubic (or lower order when n < 3) B-spline functions on [0, 1]
/// with uniform interior knots, excluding the first so that the set together
/// with an intercept spans the full spline space.
double bspline_eval(std::size_t j, std::size_t n, double t);

/// phi(x)^T for one covariate row.
Vector basis_row(const BasisSpec& spec, std::span<const double> x);

/// Sieve design for one mode: Phi(X), and an orthonormal basis U of its column
/// space so that P = U U^T.
struct SieveDesign {
  BasisSpec spec;
  Matrix covariates;  // I_m x D
  Matrix phi;         // I_m x J
  Matrix basis;       // I_m x rank(Phi)

  std::size_t extent() const { return static_cast<std::size_t>(phi.rows()); }
  std::size_t basis_count() const { return static_cast<std::size_t>(phi.cols()); }
  std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
};

/// Builds Phi(X) and its projector basis. Covariates are mapped affinely from
/// their declared domain to the basis domain. Throws ArgumentError when
/// J exceeds the number of rows.
SieveDesign build_design(const Matrix& covariates, const BasisSpec& spec);

/// Phi evaluated at arbitrary rows, using the design's spec.
Matrix design_matrix(const BasisSpec& spec, const Matrix& covariates);

/// P mat computed as U (U^T mat).
Matrix projector_apply(const SieveDesign& design, const Matrix& mat);

/// (I - P) mat.
Matrix complement_apply(const SieveDesign& design, const Matrix& mat);

/// Least-squares sieve coefficients: pinv(Phi) g.
Matrix sieve_coefficients(const SieveDesign& design, const Matrix& g);

/// phi(x)^T B.
Vector eval_loading_function(const BasisSpec& spec, const Matrix& coeffs,
                             std::span<const double> x);

}  // namespace stefa
