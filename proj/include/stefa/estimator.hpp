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
#include <vector>

#include "stefa/sieve.hpp"
#include "stefa/tensor.hpp"

namespace stefa {

/// One optional sieve design per mode; an empty entry means the mode has no
/// covariates and its projector is the identity.
using Designs = std::vector<std::optional<SieveDesign>>;

struct IterationOptions {
  std::size_t max_iter = 50;
  double tol = 1e-8;
  /// Gauss-Seidel sweep order; empty means 0, 1, ..., M-1.
  std::vector<std::size_t> order;
};

/// Power-iteration output. Loadings carry column norms sqrt(I_m).
struct IterateResult {
  std::vector<Matrix> loadings;
  std::size_t iterations = 0;
  bool converged = false;
  /// Largest per-mode sin-theta change of each sweep.
  std::vector<double> subspace_change_trace;
  /// ||Y x_1 U_1^T ... x_M U_M^T||_F^2 with orthonormal U_m, before the first
  /// sweep and after each sweep.
  std::vector<double> objective_trace;
};

struct Calibration {
  DenseTensor core;
  std::vector<Matrix> loadings;
  std::vector<Matrix> rotations;
  /// True where two mode-Gram eigenvalues are closer than 1e-10 * lambda_max,
  /// i.e. the orthogonal calibration is not identified.
  std::vector<bool> unstable;
};

struct LoadingEstimates {
  std::vector<Matrix> a;      // full loadings
  std::vector<Matrix> gamma;  // covariate-orthogonal parts
  std::vector<std::optional<Matrix>> sieve_coeffs;
};

struct ModeDiagnostics {
  double orthonormality_residual = 0.0;  // ||G^T G / I - I||_F
  double span_residual = 0.0;            // ||P G - G||_F / ||G||_F
  double gamma_orthogonality = 0.0;      // ||Phi^T Gamma||_F / (||Phi||_F ||Gamma||_F)
  double calibration_offdiag = 0.0;      // off-diagonal mass of the core mode Gram, relative
  bool identification_unstable = false;
};

/// Fitted semiparametric tensor factor model.
///
/// For modes with covariates the g-loadings satisfy G^T G / I_m = I and lie in
/// the sieve span. For modes without covariates the g-loadings hold the
/// covariate-free loading estimate (normalized the same way), gamma equals the
/// full loading and there are no sieve coefficients. Identity modes carry the
/// identity as loading and are neither compressed nor calibrated.
struct StefaFit {
  DenseTensor core;
  std::vector<Matrix> g_loadings;
  std::vector<Matrix> a_loadings;
  std::vector<Matrix> gamma;
  std::vector<std::optional<Matrix>> sieve_coeffs;
  std::vector<std::optional<BasisSpec>> basis;
  std::vector<bool> identity_modes;
  TuckerRanks ranks;
  std::size_t iterations_used = 0;
  bool converged = false;
  std::vector<double> subspace_change_trace;
  std::vector<double> objective_trace;
  std::vector<ModeDiagnostics> diagnostics;

  bool has_covariates(std::size_t mode) const { return sieve_coeffs.at(mode).has_value(); }

  /// F x_m A_m over all modes.
  DenseTensor signal() const;
  /// F x_m G_m over all modes, the projection of Y on the fitted subspaces.
  DenseTensor projected_signal() const;
};

struct HooiFit {
  DenseTensor core;
  std::vector<Matrix> loadings;  // A^T A / I_m = I
  std::size_t iterations_used = 0;
  bool converged = false;
  std::vector<double> objective_trace;
  std::vector<double> subspace_change_trace;
  std::vector<bool> unstable;

  DenseTensor signal() const;
};

struct FitOptions {
  IterationOptions iteration;
  /// Modes taken without compression (A_m = I, R_m = I_m). Empty means none.
  std::vector<bool> identity_modes;
  /// Rank selection cap when ranks are chosen automatically.
  std::optional<std::size_t> kmax;
};

/// HOSVD start followed by alternating updates, then the same orthogonal
/// calibration as the projected estimator. `init`, when given, replaces the
/// HOSVD start (columns scaled to norm sqrt(I_m)).
HooiFit hooi(const DenseTensor& y, const TuckerRanks& ranks, const IterationOptions& opts = {},
             const std::vector<Matrix>* init = nullptr);

/// Projected spectral initialization: sqrt(I_m) times the top R_m left
/// singular vectors of the mode-m unfolding of Y x_1 P_1 ... x_M P_M.
std::vector<Matrix> ipsvd_init(const DenseTensor& y, const Designs& designs,
                               const TuckerRanks& ranks);

/// Projected power iteration from `init`, which must lie in the sieve spans.
IterateResult ipsvd_iterate(const DenseTensor& y, const Designs& designs,
                            const TuckerRanks& ranks, const std::vector<Matrix>& init,
                            const IterationOptions& opts = {});

/// (prod_m s_m^2)^{-1} Y x_m G_m^T, with s_m^2 the mean squared column norm of
/// G_m (I_m for estimator output, 1 for identity loadings).
DenseTensor estimate_core(const DenseTensor& y, const std::vector<Matrix>& loadings);

/// Rotates each mode so that M_m(F) M_m(F)^T is diagonal and non-increasing.
/// Modes flagged in `fixed` are left unrotated.
Calibration calibrate(const DenseTensor& core, const std::vector<Matrix>& loadings,
                      const std::vector<bool>& fixed = {});

/// Full loadings A_m, orthogonal parts Gamma_m and sieve coefficients B_m from
/// a calibrated core and g-loadings.
LoadingEstimates estimate_loadings(const DenseTensor& y, const Designs& designs,
                                   const DenseTensor& core, const std::vector<Matrix>& g,
                                   const std::vector<bool>& identity_modes = {});

struct RankEstimate {
  TuckerRanks ranks;
  std::vector<std::vector<double>> eigenvalues;  // per mode, non-increasing
  std::vector<std::vector<double>> ratios;       // ratios[m][k-1] = lambda_k / lambda_{k+1}
  std::vector<std::size_t> kmax;                 // effective cap per mode
};

/// Eigenvalue-ratio rank estimate on the fully projected tensor.
RankEstimate estimate_ranks(const DenseTensor& y, const Designs& designs,
                            std::optional<std::size_t> kmax = std::nullopt,
                            const std::vector<bool>& identity_modes = {});

/// Nearest integer of min(I_m, prod_{n != m} I_n) / 2, halves rounded away
/// from zero.
std::size_t default_kmax(const Extents& dims, std::size_t mode);

/// End-to-end fit; ranks are estimated when not given.
StefaFit fit_stefa(const DenseTensor& y, const Designs& designs,
                   const std::optional<TuckerRanks>& ranks, const FitOptions& opts = {});

}  // namespace stefa
