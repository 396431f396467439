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


#include "stefa/simlab.hpp"

#include <cmath>
#include <limits>

#include "stefa/error.hpp"
#include "stefa/linalg.hpp"
#include "stefa/rng.hpp"

namespace stefa {
namespace {

double legendre_term(const TrueLoadingFunction& f, Eigen::Index r, std::size_t d, double x) {
  const double u = 2.0 * x - 1.0;
  double sum = 0.0;
  double decay = 1.0;
  for (std::size_t j = 1; j <= f.j_star; ++j) {
    sum += f.xi(r, static_cast<Eigen::Index>(d * f.j_star + j - 1)) * decay * legendre_eval(j, u);
    decay *= f.kappa;
  }
  return sum;
}

Matrix draw_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, bool uniform) {
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = uniform ? rng.uniform() : rng.normal();
  }
  return out;
}

Matrix upper_inverse(const Matrix& r) {
  return r.triangularView<Eigen::Upper>().solve(
      Matrix::Identity(r.rows(), r.cols()));
}

template <typename Visit>
void for_each_grid_point(std::size_t dims, std::size_t n, Visit&& visit) {
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> x(dims);
  while (true) {
    for (std::size_t d = 0; d < dims; ++d) {
      x[d] = (static_cast<double>(idx[d]) + 0.5) / static_cast<double>(n);
    }
    visit(std::span<const double>(x));
    std::size_t d = dims;
    while (d > 0) {
      --d;
      if (++idx[d] < n) break;
      idx[d] = 0;
      if (d == 0) return;
    }
    if (dims == 0) return;
  }
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "additive") return Scheme::additive;
  if (name == "multiplicative") return Scheme::multiplicative;
  throw ArgumentError("unknown scheme '" + name + "' (expected additive or multiplicative)");
}

std::string to_string(Scheme scheme) {
  return scheme == Scheme::additive ? "additive" : "multiplicative";
}

void SimConfig::validate() const {
  if (dims.empty()) throw ArgumentError("simulation needs at least one mode");
  for (std::size_t m = 0; m < dims.size(); ++m) {
    if (dims[m] == 0) throw ArgumentError("extent of mode " + std::to_string(m + 1) + " is zero");
    if (rank > dims[m]) throw ArgumentError("rank exceeds the extent of mode " + std::to_string(m + 1));
    const std::size_t basis = 1 + covariates * j_star;
    if (basis > dims[m]) {
      throw ArgumentError("true sieve dimension exceeds mode extent (J=" + std::to_string(basis) +
                          ", I=" + std::to_string(dims[m]) + ")");
    }
    if (rank > basis) throw ArgumentError("rank exceeds the true sieve dimension");
  }
  if (rank == 0) throw ArgumentError("rank must be at least 1");
  if (covariates == 0 || j_star == 0) throw ArgumentError("covariates and j_star must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw ArgumentError("kappa must lie in (0, 1)");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be non-negative");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ArgumentError("tau must be non-negative");
}

Vector TrueLoadingFunction::raw(std::span<const double> x) const {
  if (x.size() != covariates) throw ArgumentError("covariate vector has the wrong length");
  const auto r_count = static_cast<Eigen::Index>(rank);
  Vector out(r_count);
  for (Eigen::Index r = 0; r < r_count; ++r) {
    if (scheme == Scheme::additive) {
      double v = intercepts(r, 0);
      for (std::size_t d = 0; d < covariates; ++d) v += legendre_term(*this, r, d, x[d]);
      out(r) = v;
    } else {
      double v = 1.0;
      for (std::size_t d = 0; d < covariates; ++d) {
        v *= intercepts(r, static_cast<Eigen::Index>(d)) + legendre_term(*this, r, d, x[d]);
      }
      out(r) = v;
    }
  }
  return out;
}

Vector TrueLoadingFunction::operator()(std::span<const double> x) const {
  return transform.transpose() * raw(x);
}

double lambda_min(const DenseTensor& core) {
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < core.order(); ++m) {
    const std::vector<double> ev = eigenvalues_symmetric(mode_gram(core, m));
    out = std::min(out, std::sqrt(std::max(ev.back(), 0.0)));
  }
  return out;
}

SimInstance generate(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t order = config.dims.size();
  const auto r = static_cast<Eigen::Index>(config.rank);
  const auto d_count = static_cast<Eigen::Index>(config.covariates);

  SimInstance inst;
  inst.config = config;

  DenseTensor raw_core(Extents(order, config.rank));
  for (double& v : raw_core.values()) v = rng.normal();
  std::vector<std::optional<Matrix>> rot(order);
  for (std::size_t m = 0; m < order; ++m) {
    Matrix u = symmetric_eigen_descending(mode_gram(raw_core, m)).vectors;
    fix_column_signs(u);
    rot[m] = u.transpose();
  }
  inst.core = multi_mode_product(raw_core, rot);
  std::size_t i_min = config.dims[0];
  for (std::size_t d : config.dims) i_min = std::min(i_min, d);
  const double lmin = lambda_min(inst.core);
  if (!(lmin > 0.0)) throw NumericError("simulated core is rank deficient");
  inst.core *= std::pow(static_cast<double>(i_min), config.alpha) / lmin;

  BasisSpec true_spec;
  true_spec.degree = config.j_star;
  for (std::size_t m = 0; m < order; ++m) {
    const auto rows = static_cast<Eigen::Index>(config.dims[m]);
    Matrix x = draw_matrix(rng, rows, d_count, true);

    TrueLoadingFunction f;
    f.scheme = config.scheme;
    f.rank = config.rank;
    f.covariates = config.covariates;
    f.j_star = config.j_star;
    f.kappa = config.kappa;
    const Eigen::Index ic = config.scheme == Scheme::additive ? 1 : d_count;
    const auto per_cov = static_cast<Eigen::Index>(config.j_star);
    f.intercepts.resize(r, ic);
    f.xi.resize(r, d_count * per_cov);
    for (Eigen::Index k = 0; k < r; ++k) {
      if (config.scheme == Scheme::additive) {
        f.intercepts(k, 0) = rng.normal();
        for (Eigen::Index c = 0; c < d_count * per_cov; ++c) f.xi(k, c) = rng.normal();
      } else {
        for (Eigen::Index d = 0; d < d_count; ++d) {
          f.intercepts(k, d) = rng.normal();
          for (Eigen::Index j = 0; j < per_cov; ++j) f.xi(k, d * per_cov + j) = rng.normal();
        }
      }
    }
    const Matrix lambda = draw_matrix(rng, rows, r, false);

    Matrix g_raw(rows, r);
    std::vector<double> row(config.covariates);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index d = 0; d < d_count; ++d) row[static_cast<std::size_t>(d)] = x(i, d);
      g_raw.row(i) = f.raw(row).transpose();
    }
    const ThinQr qr1 = thin_qr(g_raw);

    Matrix gamma_pre = Matrix::Zero(rows, r);
    if (config.tau > 0.0) {
      const Matrix basis = orthonormal_column_basis(design_matrix(true_spec, x), 1e-10);
      const Matrix resid = lambda - basis * (basis.transpose() * lambda);
      for (Eigen::Index k = 0; k < r; ++k) {
        const double n = resid.col(k).norm();
        if (!(n > 0.0)) throw NumericError("orthogonal direction vanished");
        gamma_pre.col(k) = config.tau * resid.col(k) / n;
      }
    }
    const ThinQr qr2 = thin_qr(qr1.q + gamma_pre);
    const Matrix r2_inv = upper_inverse(qr2.r);

    f.transform = std::sqrt(static_cast<double>(rows)) * upper_inverse(qr1.r) * r2_inv;
    inst.g.push_back(qr1.q * r2_inv);
    inst.gamma.push_back(gamma_pre * r2_inv);
    inst.gamma_pre_qr.push_back(std::move(gamma_pre));
    inst.a.push_back(qr2.q);
    inst.x.push_back(std::move(x));
    inst.functions.push_back(std::move(f));
  }

  std::vector<std::optional<Matrix>> loadings(inst.a.begin(), inst.a.end());
  inst.signal = multi_mode_product(inst.core, loadings);
  inst.noise = DenseTensor(config.dims);
  for (double& v : inst.noise.values()) v = rng.normal();
  inst.y = inst.signal + inst.noise;
  return inst;
}

double loss_subspace(const Matrix& a_hat, const Matrix& a_true) {
  if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols()) {
    throw ArgumentError("loss_subspace: shapes differ");
  }
  return sin_theta_distance(a_hat, a_true);
}

double loss_remse_squared(const DenseTensor& s_hat, const DenseTensor& s_true) {
  if (s_hat.dims() != s_true.dims()) throw ArgumentError("ReMSE: tensor shapes differ");
  const double denom = s_true.squared_norm();
  if (!(denom > 0.0)) throw ArgumentError("ReMSE: true signal is zero");
  return (s_hat - s_true).squared_norm() / denom;
}

double loss_remse(const DenseTensor& s_hat, const DenseTensor& s_true) {
  return std::sqrt(loss_remse_squared(s_hat, s_true));
}

std::size_t default_grid_size(std::size_t dims) {
  if (dims == 0) return 1;
  std::size_t n = 1;
  while (std::pow(static_cast<double>(n), static_cast<double>(dims)) < 1e4) ++n;
  return n;
}

double loss_function(const ScalarFunction& g_hat, const ScalarFunction& g_true, std::size_t dims,
                     std::size_t grid_n) {
  if (grid_n == 0) grid_n = default_grid_size(dims);
  double hh = 0.0, ht = 0.0, tt = 0.0;
  for_each_grid_point(dims, grid_n, [&](std::span<const double> x) {
    const double h = g_hat(x);
    const double t = g_true(x);
    hh += h * h;
    ht += h * t;
    tt += t * t;
  });
  const double points = std::pow(static_cast<double>(grid_n), static_cast<double>(dims));
  if (tt / points < 1e-14) throw ArgumentError("degenerate true function");
  // ||s h - t||^2 = hh - 2 s ht + tt, minimized by s = sign(ht).
  return (hh - 2.0 * std::abs(ht) + tt) / tt;
}

FunctionLosses function_losses(const BasisSpec& spec, const Matrix& b_hat,
                               const TrueLoadingFunction& truth, std::size_t grid_n) {
  const std::size_t dims = truth.covariates;
  if (grid_n == 0) grid_n = default_grid_size(dims);
  const auto r = static_cast<Eigen::Index>(truth.rank);
  if (b_hat.cols() != r) throw ArgumentError("sieve coefficients have the wrong column count");
  std::size_t points = 1;
  for (std::size_t d = 0; d < dims; ++d) points *= grid_n;
  Matrix h(static_cast<Eigen::Index>(points), r);
  Matrix t(static_cast<Eigen::Index>(points), r);
  Eigen::Index i = 0;
  for_each_grid_point(dims, grid_n, [&](std::span<const double> x) {
    h.row(i) = eval_loading_function(spec, b_hat, x).transpose();
    t.row(i) = truth(x).transpose();
    ++i;
  });
  FunctionLosses out;
  const Matrix coef = pseudo_inverse(h, 1e-12) * t;
  const Matrix fitted = h * coef;
  for (Eigen::Index k = 0; k < r; ++k) {
    const double tt = t.col(k).squaredNorm();
    if (tt / static_cast<double>(points) < 1e-14) throw ArgumentError("degenerate true function");
    const double hh = h.col(k).squaredNorm();
    const double ht = h.col(k).dot(t.col(k));
    out.aligned.push_back((hh - 2.0 * std::abs(ht) + tt) / tt);
    out.best_linear.push_back((fitted.col(k) - t.col(k)).squaredNorm() / tt);
  }
  return out;
}

std::vector<NoiseAmplifyRow> noise_amplify_refit(const DenseTensor& s, const DenseTensor& e,
                                                 const Designs& designs, const TuckerRanks& ranks,
                                                 std::span<const double> amplifiers,
                                                 const IterationOptions& opts) {
  if (s.dims() != e.dims()) throw ArgumentError("signal and noise shapes differ");
  std::vector<NoiseAmplifyRow> out;
  FitOptions fit_opts;
  fit_opts.iteration = opts;
  for (double amp : amplifiers) {
    DenseTensor y = s;
    if (amp != 0.0) y += amp * DenseTensor(e);
    NoiseAmplifyRow row;
    row.amplifier = amp;
    row.stefa = loss_remse_squared(fit_stefa(y, designs, ranks, fit_opts).projected_signal(), s);
    row.hooi = loss_remse_squared(hooi(y, ranks, opts).signal(), s);
    out.push_back(row);
  }
  return out;
}

}  // namespace stefa
