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


#include "stefa/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stefa/error.hpp"

namespace stefa {
namespace {

double row_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).norm();
}

double resolve_bandwidth(const Matrix& x, const KernelSpec& spec) {
  if (!spec.bandwidth) return auto_bandwidth(x);
  const double h = *spec.bandwidth;
  if (!std::isfinite(h) || !(h > 0.0)) throw ArgumentError("bandwidth must be finite and positive");
  return h;
}

Prediction reconstruct(const DenseTensor& core, const std::vector<Matrix>& loadings,
                       const std::vector<bool>& identity, const Matrix& mode_loading,
                       std::size_t mode) {
  std::vector<std::optional<Matrix>> mats(loadings.size());
  for (std::size_t n = 0; n < loadings.size(); ++n) {
    if (n == mode) {
      mats[n] = mode_loading;
    } else if (identity.empty() || !identity[n]) {
      mats[n] = loadings[n];
    }
  }
  return Prediction{multi_mode_product(core, mats), 0.0, 0};
}

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order) {
    throw ArgumentError("prediction mode " + std::to_string(mode + 1) + " out of range");
  }
}

}  // namespace

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  throw ArgumentError("unknown kernel '" + name + "' (expected gaussian or epanechnikov)");
}

std::string to_string(KernelFamily family) {
  return family == KernelFamily::gaussian ? "gaussian" : "epanechnikov";
}

double auto_bandwidth(const Matrix& x) {
  std::vector<double> d;
  const Eigen::Index n = x.rows();
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2 + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back(row_distance(x, i, x, j));
  }
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t k = d.size();
  const double median = k % 2 ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
  if (median > 0.0) return median;
  const auto pos = std::upper_bound(d.begin(), d.end(), 0.0);
  return pos != d.end() ? *pos : 1.0;
}

double kernel_value(KernelFamily family, double distance, double bandwidth) {
  const double u = distance / bandwidth;
  if (family == KernelFamily::gaussian) return std::exp(-0.5 * u * u);
  return std::max(0.0, 1.0 - u * u);
}

WeightMatrix kernel_weights(const Matrix& x_new, const Matrix& x, const KernelSpec& spec) {
  if (x_new.cols() != x.cols()) {
    throw ArgumentError("new covariates have " + std::to_string(x_new.cols()) +
                        " columns, training covariates have " + std::to_string(x.cols()));
  }
  if (x.rows() == 0) throw ArgumentError("no training covariate rows");
  if (!x.allFinite() || !x_new.allFinite()) throw ArgumentError("covariates must be finite");
  WeightMatrix out;
  out.bandwidth = resolve_bandwidth(x, spec);
  out.w.resize(x_new.rows(), x.rows());
  for (Eigen::Index i = 0; i < x_new.rows(); ++i) {
    double sum = 0.0;
    Eigen::Index nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      const double d = row_distance(x_new, i, x, j);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = j;
      }
      const double k = kernel_value(spec.family, d, out.bandwidth);
      out.w(i, j) = k;
      sum += k;
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      out.w.row(i).setZero();
      out.w(i, nearest) = 1.0;
      ++out.fallback_rows;
    } else {
      out.w.row(i) /= sum;
    }
  }
  return out;
}

Prediction predict_stefa(const StefaFit& fit, const Designs& designs, const Matrix& x_new,
                         const KernelSpec& spec, std::size_t mode) {
  const std::size_t order = fit.core.order();
  check_mode(mode, order);
  if (mode >= designs.size() || !designs[mode] || !fit.sieve_coeffs.at(mode)) {
    throw NumericError("STEFA prediction requires covariate mode");
  }
  const SieveDesign& design = *designs[mode];
  const Matrix& b = *fit.sieve_coeffs[mode];
  const Matrix& a = fit.a_loadings.at(mode);
  if (design.extent() != static_cast<std::size_t>(a.rows())) {
    throw ArgumentError("design does not match the fitted mode extent");
  }
  const Matrix lambda = a - design.phi * b;
  const WeightMatrix w = kernel_weights(x_new, design.covariates, spec);
  const Matrix loading = design_matrix(design.spec, x_new) * b + w.w * lambda;
  Prediction out = reconstruct(fit.core, fit.a_loadings, fit.identity_modes, loading, mode);
  out.bandwidth = w.bandwidth;
  out.fallback_rows = w.fallback_rows;
  return out;
}

Prediction predict_vanilla(const DenseTensor& core, const std::vector<Matrix>& loadings,
                           const Matrix& x, const Matrix& x_new, const KernelSpec& spec,
                           std::size_t mode) {
  check_mode(mode, core.order());
  if (loadings.size() != core.order()) throw ArgumentError("one loading per mode required");
  if (x.rows() != loadings[mode].rows()) {
    throw ArgumentError("training covariates have " + std::to_string(x.rows()) +
                        " rows, mode extent is " + std::to_string(loadings[mode].rows()));
  }
  const WeightMatrix w = kernel_weights(x_new, x, spec);
  Prediction out = reconstruct(core, loadings, {}, w.w * loadings[mode], mode);
  out.bandwidth = w.bandwidth;
  out.fallback_rows = w.fallback_rows;
  return out;
}

Prediction predict_vanilla(const HooiFit& fit, const Matrix& x, const Matrix& x_new,
                           const KernelSpec& spec, std::size_t mode) {
  return predict_vanilla(fit.core, fit.loadings, x, x_new, spec, mode);
}

}  // namespace stefa
