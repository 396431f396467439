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

#include <optional>
#include <string>

#include "stefa/estimator.hpp"

namespace stefa {

/// On-disk fit directory:
///   core.tns, G_m.csv, A_m.csv, Gamma_m.csv, B_m.csv (covariate modes only),
///   covariates_m.csv (covariate modes only), report.json, and hooi/ with
///   core.tns and A_m.csv when a baseline fit is stored. Modes are 1-based.
struct FitBundle {
  StefaFit fit;
  Designs designs;
  std::optional<HooiFit> baseline;
  std::optional<RankEstimate> rank_selection;
};

/// Report JSON of a fit (documented in docs/fit_report.md).
std::string fit_report_json(const FitBundle& bundle);

/// Writes every file except the covariate copies, which the caller provides
/// with their original headers.
void save_fit(const std::string& dir, const FitBundle& bundle);

/// Reads a directory written by save_fit; designs are rebuilt from the
/// covariate copies and the recorded basis.
FitBundle load_fit(const std::string& dir);

}  // namespace stefa
