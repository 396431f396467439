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

#include <vector>

#include "stefa/estimator.hpp"

namespace stefa::detail {

enum class ModeKind { projected, free, identity };

struct ModePlan {
  ModeKind kind = ModeKind::free;
  const SieveDesign* design = nullptr;
  std::size_t rank = 0;
  double scale = 1.0;  // column norm of the loading: sqrt(I_m), or 1 for identity
};

/// Resolves per-mode roles. `ranks` may be empty when only the projection
/// structure is needed (rank fields are then zero).
std::vector<ModePlan> make_plan(const DenseTensor& y, const Designs& designs,
                                const std::vector<std::size_t>& ranks,
                                const std::vector<bool>& identity_modes);

/// Y x_m U_m^T over projected modes. Since P_m = U_m U_m^T, every projected
/// computation on Y can be carried out on this tensor.
DenseTensor compress(const DenseTensor& y, const std::vector<ModePlan>& plan);

}  // namespace stefa::detail
