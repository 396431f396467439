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

#include <cstdint>
#include <vector>

#include "stefa/estimator.hpp"
#include "stefa/linalg.hpp"
#include "stefa/rng.hpp"

namespace stefa::test {

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

inline Matrix random_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform();
  }
  return m;
}

inline DenseTensor random_tensor(Rng& rng, Extents dims) {
  DenseTensor t(std::move(dims));
  for (double& v : t.values()) v = rng.normal();
  return t;
}

inline Matrix random_orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  return thin_qr(random_matrix(rng, rows, cols)).q;
}

/// All-orthogonal core with distinct mode-Gram spectra.
inline DenseTensor planted_core(Rng& rng, const std::vector<std::size_t>& ranks, double scale) {
  DenseTensor raw = random_tensor(rng, ranks);
  std::vector<std::optional<Matrix>> rot(ranks.size());
  for (std::size_t m = 0; m < ranks.size(); ++m) {
    rot[m] = symmetric_eigen_descending(mode_gram(raw, m)).vectors.transpose();
  }
  DenseTensor core = multi_mode_product(raw, rot);
  core *= scale;
  return core;
}

/// Noiseless STEFA model: A_m = G_m + Gamma_m with G_m in span(Phi_m),
/// G^T G / I = I and Gamma_m orthogonal to Phi_m with amplitude `gamma`.
struct PlantedModel {
  DenseTensor core;
  std::vector<Matrix> g;
  std::vector<Matrix> gamma;
  std::vector<Matrix> a;
  Designs designs;
  DenseTensor y;
};

inline PlantedModel planted_model(std::uint64_t seed, const Extents& dims,
                                  const std::vector<std::size_t>& ranks, double gamma,
                                  std::size_t degree = 3) {
  Rng rng(seed);
  PlantedModel p;
  p.core = planted_core(rng, ranks, 1.0);
  BasisSpec spec;
  spec.degree = degree;
  std::vector<std::optional<Matrix>> mats;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    const auto i = static_cast<Eigen::Index>(dims[m]);
    const auto r = static_cast<Eigen::Index>(ranks[m]);
    SieveDesign d = build_design(random_uniform(rng, i, 2), spec);
    const Matrix inside = d.basis * random_matrix(rng, d.basis.cols(), r);
    Matrix g = thin_qr(inside).q * std::sqrt(static_cast<double>(i));
    Matrix gam = gamma * complement_apply(d, random_matrix(rng, i, r));
    p.a.push_back(g + gam);
    p.g.push_back(std::move(g));
    p.gamma.push_back(std::move(gam));
    p.designs.emplace_back(std::move(d));
    mats.emplace_back(p.a.back());
  }
  p.y = multi_mode_product(p.core, mats);
  return p;
}

/// Column signs s_k = sign(<a_k, b_k>), so that a * diag(s) is aligned with b.
inline Vector alignment_signs(const Matrix& a, const Matrix& b) {
  Vector s(a.cols());
  for (Eigen::Index k = 0; k < a.cols(); ++k) s(k) = a.col(k).dot(b.col(k)) < 0.0 ? -1.0 : 1.0;
  return s;
}

}  // namespace stefa::test
