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

#include "stefa/kernels.hpp"

namespace stefa::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void dot4_scalar(const double* x, const double* const* ys, std::size_t n,
                 double* out) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const double* y0 = ys[0];
  const double* y1 = ys[1];
  const double* y2 = ys[2];
  const double* y3 = ys[3];
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    s0 += xi * y0[i];
    s1 += xi * y1[i];
    s2 += xi * y2[i];
    s3 += xi * y3[i];
  }
  out[0] = s0;
  out[1] = s1;
  out[2] = s2;
  out[3] = s3;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpy4_scalar(const double* alphas, const double* const* xs, double* y,
                  std::size_t n) {
  const double a0 = alphas[0], a1 = alphas[1], a2 = alphas[2], a3 = alphas[3];
  const double* x0 = xs[0];
  const double* x1 = xs[1];
  const double* x2 = xs[2];
  const double* x3 = xs[3];
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += a0 * x0[i] + a1 * x1[i] + a2 * x2[i] + a3 * x3[i];
  }
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar,  "scalar",    dot_scalar,
                                 dot4_scalar,  axpy_scalar, axpy4_scalar,
                                 sum_squares_scalar};
  return table;
}

}  // namespace stefa::kernels
