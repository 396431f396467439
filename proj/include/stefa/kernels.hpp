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
#include <string_view>

// Double-precision inner loops used by the tensor contractions and Gram
// accumulations. Each instruction set provides the same table of function
// pointers; the scalar table is the reference implementation and every other
// variant is tested against it.
namespace stefa::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);

  // out[k] = sum_i x[i] * ys[k][i] for k = 0..3
  void (*dot4)(const double* x, const double* const* ys, std::size_t n,
               double* out);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // y[i] += a0 * x0[i] + a1 * x1[i] + a2 * x2[i] + a3 * x3[i]
  void (*axpy4)(const double* alphas, const double* const* xs, double* y,
                std::size_t n);

  // sum_i x[i]^2
  double (*sum_squares)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();

// Returns nullptr when the variant was not compiled in or the running CPU
// lacks the instructions.
const KernelTable* avx2_table();

// Table selected at first use: the widest supported variant, unless the
// environment variable STEFA_SIMD is set to "scalar".
const KernelTable& active();

// Overrides the runtime selection for the rest of the process. Returns false
// when the requested variant is unavailable (the selection is unchanged).
bool select(Isa isa);

}  // namespace stefa::kernels
