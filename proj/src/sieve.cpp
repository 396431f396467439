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

#include "stefa/sieve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "stefa/error.hpp"
#include "stefa/linalg.hpp"

namespace stefa {

std::size_t BasisSpec::basis_count(std::size_t covariates) const {
  return (intercept ? 1 : 0) + covariates * degree;
}

Interval BasisSpec::domain(std::size_t d) const {
  if (domains.empty()) return Interval{};
  return domains.at(d);
}

BasisSpec parse_basis(const std::string& text) {
  const auto colon = text.find(':');
  const std::string family = text.substr(0, colon);
  BasisSpec spec;
  if (family == "legendre") {
    spec.family = BasisFamily::legendre;
  } else if (family == "bspline") {
    spec.family = BasisFamily::bspline;
  } else {
    throw ArgumentError("unknown basis family '" + family + "' (expected legendre or bspline)");
  }
  if (colon != std::string::npos) {
    const std::string deg = text.substr(colon + 1);
    std::size_t d = 0;
    const auto res = std::from_chars(deg.data(), deg.data() + deg.size(), d);
    if (res.ec != std::errc() || res.ptr != deg.data() + deg.size() || d == 0) {
      throw ArgumentError("invalid basis degree '" + deg + "'");
    }
    spec.degree = d;
  }
  return spec;
}

std::string to_string(const BasisSpec& spec) {
  return std::string(spec.family == BasisFamily::legendre ? "legendre" : "bspline") + ":" +
         std::to_string(spec.degree);
}

double legendre_eval(std::size_t j, double u) {
  if (j == 0) return 1.0;
  double prev = 1.0;
  double cur = u;
  for (std::size_t k = 1; k < j; ++k) {
    const double kd = static_cast<double>(k);
    const double next = ((2.0 * kd + 1.0) * u * cur - kd * prev) / (kd + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double bspline_eval(std::size_t j, std::size_t n, double t) {
  if (j >= n) throw ArgumentError("bspline index out of range");
  const std::size_t order = std::min<std::size_t>(4, n + 1);
  const std::size_t count = n + 1;  // full space dimension
  const std::size_t interior = count - order;
  std::vector<double> knots;
  knots.reserve(count + order);
  for (std::size_t i = 0; i < order; ++i) knots.push_back(0.0);
  for (std::size_t i = 1; i <= interior; ++i) {
    knots.push_back(static_cast<double>(i) / static_cast<double>(interior + 1));
  }
  for (std::size_t i = 0; i < order; ++i) knots.push_back(1.0);

  t = std::clamp(t, 0.0, 1.0);
  // Order-1 indicator functions; the last non-empty span is closed on the right.
  std::vector<double> b(knots.size() - 1, 0.0);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (knots[i] < knots[i + 1] &&
        ((t >= knots[i] && t < knots[i + 1]) || (t == 1.0 && knots[i + 1] == 1.0))) {
      b[i] = 1.0;
      if (t == 1.0) break;
    }
  }
  for (std::size_t k = 2; k <= order; ++k) {
    for (std::size_t i = 0; i + k < knots.size(); ++i) {
      double v = 0.0;
      const double d1 = knots[i + k - 1] - knots[i];
      const double d2 = knots[i + k] - knots[i + 1];
      if (d1 > 0.0) v += (t - knots[i]) / d1 * b[i];
      if (d2 > 0.0) v += (knots[i + k] - t) / d2 * b[i + 1];
      b[i] = v;
    }
  }
  return b[j + 1];
}

Vector basis_row(const BasisSpec& spec, std::span<const double> x) {
  if (spec.degree == 0) throw ArgumentError("basis degree must be at least 1");
  if (!spec.domains.empty() && spec.domains.size() != x.size()) {
    throw ArgumentError("basis domains do not match covariate count");
  }
  Vector row(static_cast<Eigen::Index>(spec.basis_count(x.size())));
  Eigen::Index c = 0;
  if (spec.intercept) row(c++) = 1.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const Interval dom = spec.domain(d);
    const double width = dom.hi - dom.lo;
    if (!(width > 0.0)) throw ArgumentError("covariate domain must have positive width");
    const double unit = (x[d] - dom.lo) / width;  // [0, 1]
    for (std::size_t j = 1; j <= spec.degree; ++j) {
      if (spec.family == BasisFamily::legendre) {
        row(c++) = legendre_eval(j, 2.0 * unit - 1.0);
      } else {
        row(c++) = bspline_eval(j - 1, spec.degree, unit);
      }
    }
  }
  return row;
}

Matrix design_matrix(const BasisSpec& spec, const Matrix& covariates) {
  if (!covariates.allFinite()) throw ArgumentError("covariates must be finite");
  const auto d = static_cast<std::size_t>(covariates.cols());
  Matrix phi(covariates.rows(), static_cast<Eigen::Index>(spec.basis_count(d)));
  std::vector<double> x(d);
  for (Eigen::Index i = 0; i < covariates.rows(); ++i) {
    for (std::size_t k = 0; k < d; ++k) x[k] = covariates(i, static_cast<Eigen::Index>(k));
    phi.row(i) = basis_row(spec, x).transpose();
  }
  return phi;
}

SieveDesign build_design(const Matrix& covariates, const BasisSpec& spec) {
  const auto rows = static_cast<std::size_t>(covariates.rows());
  const std::size_t j = spec.basis_count(static_cast<std::size_t>(covariates.cols()));
  if (j > rows) {
    throw ArgumentError("sieve dimension exceeds mode extent (J=" + std::to_string(j) +
                        ", I=" + std::to_string(rows) + ")");
  }
  if (j == 0) throw ArgumentError("sieve basis is empty");
  SieveDesign design;
  design.spec = spec;
  design.covariates = covariates;
  design.phi = design_matrix(spec, covariates);
  design.basis = orthonormal_column_basis(design.phi, 1e-10);
  return design;
}

Matrix projector_apply(const SieveDesign& design, const Matrix& mat) {
  if (static_cast<std::size_t>(mat.rows()) != design.extent()) {
    throw ArgumentError("projector_apply: matrix has " + std::to_string(mat.rows()) +
                        " rows, design has " + std::to_string(design.extent()));
  }
  return design.basis * (design.basis.transpose() * mat);
}

Matrix complement_apply(const SieveDesign& design, const Matrix& mat) {
  return mat - projector_apply(design, mat);
}

Matrix sieve_coefficients(const SieveDesign& design, const Matrix& g) {
  if (static_cast<std::size_t>(g.rows()) != design.extent()) {
    throw ArgumentError("sieve_coefficients: row count mismatch");
  }
  return pseudo_inverse(design.phi, 1e-12) * g;
}

Vector eval_loading_function(const BasisSpec& spec, const Matrix& coeffs,
                             std::span<const double> x) {
  const Vector row = basis_row(spec, x);
  if (coeffs.rows() != row.size()) {
    throw ArgumentError("sieve coefficient matrix has " + std::to_string(coeffs.rows()) +
                        " rows, basis has " + std::to_string(row.size()));
  }
  return coeffs.transpose() * row;
}

}  // namespace stefa
