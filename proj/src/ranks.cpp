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

#include <algorithm>
#include <cmath>
#include <string>

#include "estimator_internal.hpp"
#include "stefa/error.hpp"
#include "stefa/estimator.hpp"
#include "stefa/linalg.hpp"

namespace stefa {

std::size_t default_kmax(const Extents& dims, std::size_t mode) {
  if (mode >= dims.size()) throw ArgumentError("mode out of range");
  std::size_t others = 1;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (n != mode) others *= dims[n];
  }
  const std::size_t lo = std::min(dims[mode], others);
  return static_cast<std::size_t>(std::lround(static_cast<double>(lo) / 2.0));
}

RankEstimate estimate_ranks(const DenseTensor& y, const Designs& designs,
                            std::optional<std::size_t> kmax,
                            const std::vector<bool>& identity_modes) {
  for (double v : y.values()) {
    if (!std::isfinite(v)) throw ArgumentError("tensor contains non-finite values");
  }
  if (kmax && *kmax == 0) throw ArgumentError("kmax must be at least 1");
  const auto plan = detail::make_plan(y, designs, {}, identity_modes);
  const DenseTensor projected = detail::compress(y, plan);
  if (projected.squared_norm() == 0.0) {
    throw NumericError("projected tensor is zero; ranks are not identifiable");
  }

  const std::size_t order = y.order();
  RankEstimate out;
  out.ranks.ranks.resize(order);
  out.eigenvalues.resize(order);
  out.ratios.resize(order);
  out.kmax.resize(order);
  for (std::size_t m = 0; m < order; ++m) {
    if (plan[m].kind == detail::ModeKind::identity) {
      out.ranks.ranks[m] = y.dim(m);
      out.kmax[m] = y.dim(m);
      continue;
    }
    std::vector<double> lambda = eigenvalues_symmetric(mode_gram(projected, m));
    for (double& v : lambda) v = std::max(v, 0.0);  // Gram matrix: negatives are round-off
    // Projected unfoldings have rank at most rank(Phi); the remaining
    // eigenvalues of the I_m x I_m Gram are exactly zero.
    lambda.resize(y.dim(m), 0.0);

    std::size_t cap = kmax.value_or(default_kmax(y.dims(), m));
    cap = std::min(cap, y.dim(m) - 1);
    if (plan[m].kind == detail::ModeKind::projected) {
      cap = std::min(cap, plan[m].design->rank() - 1);
    }
    cap = std::max<std::size_t>(cap, 1);
    cap = std::min(cap, lambda.size() - 1);

    const double floor = 1e-12 * std::max(lambda[0], 0.0);
    std::vector<double> ratios;
    std::size_t best = 1;
    double best_ratio = -1.0;
    for (std::size_t k = 1; k <= cap; ++k) {
      const double num = std::max(lambda[k - 1], floor);
      const double den = std::max(lambda[k], floor);
      const double ratio = den > 0.0 ? num / den : 1.0;
      ratios.push_back(ratio);
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = k;
      }
    }
    out.ranks.ranks[m] = best;
    out.eigenvalues[m] = std::move(lambda);
    out.ratios[m] = std::move(ratios);
    out.kmax[m] = cap;
  }
  return out;
}

}  // namespace stefa
