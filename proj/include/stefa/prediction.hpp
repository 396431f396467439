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
#include <optional>
#include <string>

#include "stefa/estimator.hpp"

namespace stefa {

enum class KernelFamily { gaussian, epanechnikov };

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  /// Empty means "auto": the median pairwise Euclidean distance among the
  /// training rows.
  std::optional<double> bandwidth;
};

KernelFamily parse_kernel_family(const std::string& name);
std::string to_string(KernelFamily family);

/// Row-stochastic kernel weights between new and training covariate rows.
struct WeightMatrix {
  Matrix w;  // I_new x I
  double bandwidth = 0.0;
  /// Rows whose kernel values all vanished and fell back to the nearest
  /// training row.
  std::size_t fallback_rows = 0;
};

/// Median pairwise distance among the rows of `x`. Falls back to the smallest
/// positive distance, then to 1, when the median is zero.
double auto_bandwidth(const Matrix& x);

/// Gaussian: exp(-d^2 / (2 h^2)). Epanechnikov: max(0, 1 - (d/h)^2).
double kernel_value(KernelFamily family, double distance, double bandwidth);

WeightMatrix kernel_weights(const Matrix& x_new, const Matrix& x, const KernelSpec& spec);

struct Prediction {
  DenseTensor values;
  double bandwidth = 0.0;
  std::size_t fallback_rows = 0;
};

/// Sieve extrapolation plus kernel-smoothed residual loading along `mode`:
/// F x_mode [Phi(X_new) B + W (A - Phi(X) B)] x_{n != mode} A_n.
/// Throws NumericError when `mode` has no covariates.
Prediction predict_stefa(const StefaFit& fit, const Designs& designs, const Matrix& x_new,
                         const KernelSpec& spec, std::size_t mode = 0);

/// Kernel smoothing of a Tucker reconstruction: (F x_n A_n) x_mode W.
Prediction predict_vanilla(const DenseTensor& core, const std::vector<Matrix>& loadings,
                           const Matrix& x, const Matrix& x_new, const KernelSpec& spec,
                           std::size_t mode = 0);
Prediction predict_vanilla(const HooiFit& fit, const Matrix& x, const Matrix& x_new,
                           const KernelSpec& spec, std::size_t mode = 0);

}  // namespace stefa
