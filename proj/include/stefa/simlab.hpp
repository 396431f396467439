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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stefa/estimator.hpp"

namespace stefa {

enum class Scheme { additive, multiplicative };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

struct SimConfig {
  Extents dims{100, 100, 100};
  std::size_t rank = 3;
  std::size_t covariates = 2;  // D per mode
  double alpha = 0.5;          // lambda_min = I_min^alpha
  std::size_t j_star = 4;      // Legendre functions per covariate
  double kappa = 0.5;
  double tau = 0.0;            // amplitude of the covariate-orthogonal part
  Scheme scheme = Scheme::additive;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Coefficients of the true loading functions of one mode. Raw functions are
///   additive:        xi0_r + sum_d sum_j xi_{r,d,j} kappa^{j-1} P_j(2 x_d - 1)
///   multiplicative:  prod_d (xi0_{r,d} + sum_j xi_{r,d,j} kappa^{j-1} P_j(2 x_d - 1))
/// and the true g-loading functions are g*(x) = transform^T raw(x), the scale
/// and rotation that the generator applies to reach the identified G.
struct TrueLoadingFunction {
  Scheme scheme = Scheme::additive;
  std::size_t rank = 0;
  std::size_t covariates = 0;
  std::size_t j_star = 0;
  double kappa = 0.5;
  Matrix intercepts;  // R x 1 (additive) or R x D (multiplicative)
  Matrix xi;          // R x (D * j_star), covariate-major
  Matrix transform;   // R x R

  Vector raw(std::span<const double> x) const;
  Vector operator()(std::span<const double> x) const;
};

struct SimInstance {
  SimConfig config;
  DenseTensor y;
  DenseTensor signal;
  DenseTensor noise;
  DenseTensor core;               // all-orthogonal, lambda_min = I_min^alpha
  std::vector<Matrix> a;          // orthonormal columns, S = F x_m A_m
  std::vector<Matrix> g;          // A = G + Gamma
  std::vector<Matrix> gamma;
  std::vector<Matrix> gamma_pre_qr;  // columns of norm tau, orthogonal to the true sieve span
  std::vector<Matrix> x;          // I_m x D, U(0, 1)
  std::vector<TrueLoadingFunction> functions;
};

/// Draw order for a given seed: core entries, then per mode the covariates,
/// the function coefficients and the Gamma directions, then the noise.
SimInstance generate(const SimConfig& config);

/// Smallest R_m-th singular value of M_m(core) over modes.
double lambda_min(const DenseTensor& core);

/// Schatten-2 sin-theta distance between column spaces, in [0, sqrt(R)].
double loss_subspace(const Matrix& a_hat, const Matrix& a_true);

/// ||S_hat - S||_F / ||S||_F, or its square.
double loss_remse(const DenseTensor& s_hat, const DenseTensor& s_true);
double loss_remse_squared(const DenseTensor& s_hat, const DenseTensor& s_true);

/// Smallest n with n^dims >= 10^4.
std::size_t default_grid_size(std::size_t dims);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Integrated squared error relative to the squared norm of g_true, on the
/// midpoint grid of [0,1]^dims, minimized over the sign of g_hat.
double loss_function(const ScalarFunction& g_hat, const ScalarFunction& g_true, std::size_t dims,
                     std::size_t grid_n = 0);

struct FunctionLosses {
  std::vector<double> aligned;      // per column, sign-aligned
  std::vector<double> best_linear;  // g*_r against its projection on span{g_hat_1..g_hat_R}
};

/// Loss of the fitted loading functions phi(x)^T B_hat against `truth`.
FunctionLosses function_losses(const BasisSpec& spec, const Matrix& b_hat,
                               const TrueLoadingFunction& truth, std::size_t grid_n = 0);

struct NoiseAmplifyRow {
  double amplifier = 0.0;
  double stefa = 0.0;  // squared ReMSE of the projected signal estimate
  double hooi = 0.0;
};

/// Refits both estimators on Y = S + amplifier * E for each amplifier and
/// reports the squared ReMSE against S.
std::vector<NoiseAmplifyRow> noise_amplify_refit(const DenseTensor& s, const DenseTensor& e,
                                                 const Designs& designs, const TuckerRanks& ranks,
                                                 std::span<const double> amplifiers,
                                                 const IterationOptions& opts = {});

}  // namespace stefa
