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

#include "stefa/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "estimator_internal.hpp"
#include "stefa/error.hpp"
#include "stefa/linalg.hpp"

namespace stefa {
namespace detail {

std::vector<ModePlan> make_plan(const DenseTensor& y, const Designs& designs,
                                const std::vector<std::size_t>& ranks,
                                const std::vector<bool>& identity_modes) {
  const std::size_t order = y.order();
  if (!designs.empty() && designs.size() != order) {
    throw ArgumentError("expected one design slot per mode (" + std::to_string(order) +
                        "), got " + std::to_string(designs.size()));
  }
  if (!identity_modes.empty() && identity_modes.size() != order) {
    throw ArgumentError("identity mode flags do not match tensor order");
  }
  std::vector<ModePlan> plan(order);
  for (std::size_t m = 0; m < order; ++m) {
    ModePlan& p = plan[m];
    const std::string mode = "mode " + std::to_string(m + 1);
    const bool identity = !identity_modes.empty() && identity_modes[m];
    const bool has_design = !designs.empty() && designs[m].has_value();
    if (identity && has_design) {
      throw ArgumentError(mode + " cannot be both uncompressed and covariate-driven");
    }
    if (identity) {
      p.kind = ModeKind::identity;
      p.rank = y.dim(m);
      p.scale = 1.0;
      continue;
    }
    p.scale = std::sqrt(static_cast<double>(y.dim(m)));
    p.rank = ranks.empty() ? 0 : ranks[m];
    if (has_design) {
      p.kind = ModeKind::projected;
      p.design = &*designs[m];
      if (p.design->extent() != y.dim(m)) {
        throw ArgumentError(mode + ": design has " + std::to_string(p.design->extent()) +
                            " rows but the tensor extent is " + std::to_string(y.dim(m)));
      }
      if (p.rank > p.design->rank()) {
        throw NumericError("rank exceeds sieve span (" + mode + ": R=" +
                           std::to_string(p.rank) + ", rank(Phi)=" +
                           std::to_string(p.design->rank()) + ")");
      }
    } else {
      p.kind = ModeKind::free;
    }
  }
  return plan;
}

DenseTensor compress(const DenseTensor& y, const std::vector<ModePlan>& plan) {
  std::vector<std::optional<Matrix>> mats(plan.size());
  for (std::size_t m = 0; m < plan.size(); ++m) {
    if (plan[m].kind == ModeKind::projected) mats[m] = plan[m].design->basis.transpose();
  }
  return multi_mode_product(y, mats);
}

}  // namespace detail

namespace {

using detail::ModeKind;
using detail::ModePlan;

void check_finite(const DenseTensor& y) {
  for (double v : y.values()) {
    if (!std::isfinite(v)) throw ArgumentError("tensor contains non-finite values");
  }
}

std::vector<std::size_t> sweep_order(const IterationOptions& opts, std::size_t order) {
  if (opts.order.empty()) {
    std::vector<std::size_t> o(order);
    std::iota(o.begin(), o.end(), std::size_t{0});
    return o;
  }
  std::vector<std::size_t> sorted = opts.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t m = 0; m < order; ++m) {
    if (sorted.size() != order || sorted[m] != m) {
      throw ArgumentError("update order must be a permutation of the modes");
    }
  }
  return opts.order;
}

void validate_ranks(const DenseTensor& y, const std::vector<ModePlan>& plan) {
  for (std::size_t m = 0; m < plan.size(); ++m) {
    if (plan[m].kind == ModeKind::identity) continue;
    const std::string mode = "mode " + std::to_string(m + 1);
    if (plan[m].rank < 1) throw ArgumentError("rank of " + mode + " must be at least 1");
    if (plan[m].rank > y.dim(m)) {
      throw ArgumentError("rank of " + mode + " exceeds its extent " + std::to_string(y.dim(m)));
    }
    std::size_t others = 1;
    for (std::size_t n = 0; n < plan.size(); ++n) {
      if (n != m) others *= plan[n].rank;
    }
    if (plan.size() > 1 && plan[m].rank > others) {
      throw ArgumentError("rank of " + mode + " exceeds the product of the other ranks");
    }
  }
}

// Compressed-coordinate orthonormal factor of a full loading.
Matrix compressed_factor(const ModePlan& p, const Matrix& loading) {
  if (p.kind == ModeKind::projected) return p.design->basis.transpose() * loading / p.scale;
  return loading / p.scale;
}

Matrix expand(const ModePlan& p, const Matrix& factor) {
  if (p.kind == ModeKind::projected) return p.design->basis * factor * p.scale;
  return factor * p.scale;
}

std::vector<Matrix> init_internal(const DenseTensor& compressed, const std::vector<ModePlan>& plan) {
  std::vector<Matrix> out(plan.size());
  for (std::size_t m = 0; m < plan.size(); ++m) {
    const ModePlan& p = plan[m];
    if (p.kind == ModeKind::identity) {
      out[m] = Matrix::Identity(static_cast<Eigen::Index>(p.rank),
                                static_cast<Eigen::Index>(p.rank));
      continue;
    }
    out[m] = expand(p, leading_mode_subspace(compressed, m, p.rank));
    fix_column_signs(out[m]);
  }
  return out;
}

IterateResult iterate_internal(const DenseTensor& compressed, const std::vector<ModePlan>& plan,
                               const std::vector<Matrix>& init, const IterationOptions& opts) {
  const std::size_t order = plan.size();
  const std::vector<std::size_t> sweep = sweep_order(opts, order);
  IterateResult res;
  res.loadings = init;
  std::vector<Matrix> factors(order);
  for (std::size_t m = 0; m < order; ++m) {
    if (plan[m].kind != ModeKind::identity) factors[m] = compressed_factor(plan[m], init[m]);
  }

  auto contracted = [&](std::optional<std::size_t> skip) {
    std::vector<std::optional<Matrix>> mats(order);
    for (std::size_t n = 0; n < order; ++n) {
      if (plan[n].kind == ModeKind::identity || (skip && *skip == n)) continue;
      mats[n] = factors[n].transpose();
    }
    return multi_mode_product(compressed, mats);
  };

  bool any_free = false;
  for (const auto& p : plan) any_free = any_free || p.kind != ModeKind::identity;
  if (!any_free) {
    res.converged = true;
    return res;
  }
  res.objective_trace.push_back(contracted(std::nullopt).squared_norm());

  for (std::size_t t = 1; t <= opts.max_iter; ++t) {
    double change = 0.0;
    double objective = 0.0;
    for (std::size_t m : sweep) {
      const ModePlan& p = plan[m];
      if (p.kind == ModeKind::identity) continue;
      const Matrix unfolded = matricize(contracted(m), m);
      Matrix v = top_left_singular_vectors(unfolded, p.rank);
      Matrix full = expand(p, v);
      const Vector flips = fix_column_signs(full);
      v = v * flips.asDiagonal();
      change = std::max(change, sin_theta_distance(full, res.loadings[m]));
      res.loadings[m] = std::move(full);
      factors[m] = std::move(v);
      objective = (factors[m].transpose() * unfolded).squaredNorm();
    }
    res.iterations = t;
    res.subspace_change_trace.push_back(change);
    res.objective_trace.push_back(objective);
    if (change < opts.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

std::vector<std::size_t> rank_vector(const TuckerRanks& ranks, std::size_t order) {
  if (ranks.order() != order) {
    throw ArgumentError("expected " + std::to_string(order) + " ranks, got " +
                        std::to_string(ranks.order()));
  }
  return ranks.ranks;
}

DenseTensor core_internal(const DenseTensor& y, const std::vector<Matrix>& loadings,
                          const std::vector<double>& scales) {
  std::vector<std::optional<Matrix>> mats(loadings.size());
  for (std::size_t m = 0; m < loadings.size(); ++m) {
    if (static_cast<std::size_t>(loadings[m].rows()) != y.dim(m)) {
      throw ArgumentError("loading of mode " + std::to_string(m + 1) + " has " +
                          std::to_string(loadings[m].rows()) + " rows, tensor extent is " +
                          std::to_string(y.dim(m)));
    }
    if (scales[m] == 1.0 && loadings[m].isIdentity(0.0)) continue;
    mats[m] = loadings[m].transpose() / (scales[m] * scales[m]);
  }
  return multi_mode_product(y, mats);
}

double column_scale(const Matrix& g) {
  if (g.cols() == 0) throw ArgumentError("loading has no columns");
  return std::sqrt(g.squaredNorm() / static_cast<double>(g.cols()));
}

double relative_offdiag(const Matrix& gram) {
  const double total = gram.norm();
  if (total == 0.0) return 0.0;
  const Matrix off = gram - Matrix(gram.diagonal().asDiagonal());
  return off.norm() / total;
}

}  // namespace

std::vector<Matrix> ipsvd_init(const DenseTensor& y, const Designs& designs,
                               const TuckerRanks& ranks) {
  check_finite(y);
  const auto plan = detail::make_plan(y, designs, rank_vector(ranks, y.order()), {});
  validate_ranks(y, plan);
  return init_internal(detail::compress(y, plan), plan);
}

IterateResult ipsvd_iterate(const DenseTensor& y, const Designs& designs,
                            const TuckerRanks& ranks, const std::vector<Matrix>& init,
                            const IterationOptions& opts) {
  check_finite(y);
  const auto plan = detail::make_plan(y, designs, rank_vector(ranks, y.order()), {});
  validate_ranks(y, plan);
  if (init.size() != plan.size()) throw ArgumentError("one initial loading per mode required");
  for (std::size_t m = 0; m < plan.size(); ++m) {
    const auto rows = static_cast<std::size_t>(init[m].rows());
    const auto cols = static_cast<std::size_t>(init[m].cols());
    if (rows != y.dim(m) || cols != plan[m].rank) {
      throw ArgumentError("initial loading of mode " + std::to_string(m + 1) +
                          " has the wrong shape");
    }
    if (plan[m].kind == ModeKind::projected) {
      const double resid = complement_apply(*plan[m].design, init[m]).norm();
      if (resid > 1e-8 * std::max(init[m].norm(), 1e-300)) {
        throw ArgumentError("initial loading of mode " + std::to_string(m + 1) +
                            " is not in the sieve span");
      }
    }
  }
  return iterate_internal(detail::compress(y, plan), plan, init, opts);
}

DenseTensor estimate_core(const DenseTensor& y, const std::vector<Matrix>& loadings) {
  if (loadings.size() != y.order()) throw ArgumentError("one loading per mode required");
  std::vector<double> scales(loadings.size());
  for (std::size_t m = 0; m < loadings.size(); ++m) scales[m] = column_scale(loadings[m]);
  return core_internal(y, loadings, scales);
}

Calibration calibrate(const DenseTensor& core, const std::vector<Matrix>& loadings,
                      const std::vector<bool>& fixed) {
  const std::size_t order = core.order();
  if (loadings.size() != order) throw ArgumentError("one loading per mode required");
  if (!fixed.empty() && fixed.size() != order) throw ArgumentError("fixed-mode flags do not match order");
  Calibration out;
  out.loadings = loadings;
  out.rotations.resize(order);
  out.unstable.assign(order, false);
  std::vector<std::optional<Matrix>> mats(order);
  for (std::size_t m = 0; m < order; ++m) {
    if (static_cast<std::size_t>(loadings[m].cols()) != core.dim(m)) {
      throw ArgumentError("loading of mode " + std::to_string(m + 1) +
                          " does not match the core extent");
    }
    const auto r = static_cast<Eigen::Index>(core.dim(m));
    if (!fixed.empty() && fixed[m]) {
      out.rotations[m] = Matrix::Identity(r, r);
      continue;
    }
    const SymmetricEigen eig = symmetric_eigen_descending(mode_gram(core, m));
    const double lmax = std::max(eig.values(0), 0.0);
    for (Eigen::Index k = 0; k + 1 < r; ++k) {
      if (eig.values(k) - eig.values(k + 1) < 1e-10 * lmax) out.unstable[m] = true;
    }
    if (r > 0 && eig.values(r - 1) <= 1e-10 * lmax) out.unstable[m] = true;
    Matrix rot = eig.vectors;
    Matrix g = loadings[m] * rot;
    const Vector flips = fix_column_signs(g);
    rot = rot * flips.asDiagonal();
    out.loadings[m] = std::move(g);
    mats[m] = rot.transpose();
    out.rotations[m] = std::move(rot);
  }
  out.core = multi_mode_product(core, mats);
  return out;
}

LoadingEstimates estimate_loadings(const DenseTensor& y, const Designs& designs,
                                   const DenseTensor& core, const std::vector<Matrix>& g,
                                   const std::vector<bool>& identity_modes) {
  const std::size_t order = y.order();
  if (g.size() != order || core.order() != order) {
    throw ArgumentError("estimate_loadings: order mismatch");
  }
  std::vector<std::size_t> ranks(order);
  for (std::size_t m = 0; m < order; ++m) ranks[m] = core.dim(m);
  const auto plan = detail::make_plan(y, designs, ranks, identity_modes);

  std::vector<Matrix> projected_g(order);
  std::vector<Matrix> gram(order);
  for (std::size_t m = 0; m < order; ++m) {
    if (plan[m].kind == ModeKind::identity) continue;
    projected_g[m] = plan[m].kind == ModeKind::projected ? projector_apply(*plan[m].design, g[m])
                                                         : g[m];
    gram[m] = g[m].transpose() * g[m] / (plan[m].scale * plan[m].scale);
  }

  LoadingEstimates out;
  out.a.resize(order);
  out.gamma.resize(order);
  out.sieve_coeffs.resize(order);
  for (std::size_t m = 0; m < order; ++m) {
    const ModePlan& p = plan[m];
    if (p.kind == ModeKind::identity) {
      out.a[m] = Matrix::Identity(static_cast<Eigen::Index>(y.dim(m)),
                                  static_cast<Eigen::Index>(y.dim(m)));
      out.gamma[m] = out.a[m];
      continue;
    }
    std::vector<std::optional<Matrix>> data_mats(order);
    std::vector<std::optional<Matrix>> core_mats(order);
    double others_scale = 1.0;
    for (std::size_t j = 0; j < order; ++j) {
      if (j == m || plan[j].kind == ModeKind::identity) continue;
      data_mats[j] = projected_g[j].transpose() / plan[j].scale;
      core_mats[j] = gram[j];
      others_scale *= plan[j].scale;
    }
    // M_m(Y x_{j!=m} P_j) Q^T with Q = M_m(F x_{j!=m} G_j / s_j).
    const Matrix cross = matricize(multi_mode_product(y, data_mats), m) *
                         matricize(core, m).transpose();
    const Matrix qqt = matricize(multi_mode_product(core, core_mats), m) *
                       matricize(core, m).transpose();
    const double trace = qqt.trace();
    const Eigen::JacobiSVD<Matrix> svd(qqt);
    const Vector& sv = svd.singularValues();
    if (!(trace > 0.0) || sv(sv.size() - 1) < 1e-12 * trace) {
      throw NumericError("degenerate core (mode " + std::to_string(m + 1) +
                         "): Q Q^T is singular, ranks may be misspecified");
    }
    Matrix a = cross * pseudo_inverse(qqt, 1e-12) / others_scale;
    if (p.kind == ModeKind::projected) {
      out.gamma[m] = complement_apply(*p.design, a);
      out.sieve_coeffs[m] = sieve_coefficients(*p.design, g[m]);
    } else {
      out.gamma[m] = a;
    }
    out.a[m] = std::move(a);
  }
  return out;
}

DenseTensor StefaFit::signal() const {
  std::vector<std::optional<Matrix>> mats(a_loadings.size());
  for (std::size_t m = 0; m < a_loadings.size(); ++m) {
    if (!identity_modes.empty() && identity_modes[m]) continue;
    mats[m] = a_loadings[m];
  }
  return multi_mode_product(core, mats);
}

DenseTensor StefaFit::projected_signal() const {
  std::vector<std::optional<Matrix>> mats(g_loadings.size());
  for (std::size_t m = 0; m < g_loadings.size(); ++m) {
    if (!identity_modes.empty() && identity_modes[m]) continue;
    mats[m] = g_loadings[m];
  }
  return multi_mode_product(core, mats);
}

DenseTensor HooiFit::signal() const {
  std::vector<std::optional<Matrix>> mats(loadings.begin(), loadings.end());
  return multi_mode_product(core, mats);
}

HooiFit hooi(const DenseTensor& y, const TuckerRanks& ranks, const IterationOptions& opts,
             const std::vector<Matrix>* init) {
  check_finite(y);
  ranks.validate(y.dims());
  const auto plan = detail::make_plan(y, {}, ranks.ranks, {});
  std::vector<Matrix> start;
  if (init != nullptr) {
    if (init->size() != y.order()) throw ArgumentError("one initial loading per mode required");
    start = *init;
  } else {
    start = init_internal(y, plan);
  }
  IterateResult it = iterate_internal(y, plan, start, opts);
  std::vector<double> scales(plan.size());
  for (std::size_t m = 0; m < plan.size(); ++m) scales[m] = plan[m].scale;
  Calibration cal = calibrate(core_internal(y, it.loadings, scales), it.loadings);

  HooiFit fit;
  fit.core = std::move(cal.core);
  fit.loadings = std::move(cal.loadings);
  fit.iterations_used = it.iterations;
  fit.converged = it.converged;
  fit.objective_trace = std::move(it.objective_trace);
  fit.subspace_change_trace = std::move(it.subspace_change_trace);
  fit.unstable = std::move(cal.unstable);
  return fit;
}

StefaFit fit_stefa(const DenseTensor& y, const Designs& designs,
                   const std::optional<TuckerRanks>& ranks, const FitOptions& opts) {
  check_finite(y);
  const std::size_t order = y.order();
  std::vector<bool> identity = opts.identity_modes;
  if (identity.empty()) identity.assign(order, false);

  std::vector<std::size_t> r;
  if (ranks) {
    r = rank_vector(*ranks, order);
  } else {
    r = estimate_ranks(y, designs, opts.kmax, identity).ranks.ranks;
  }
  for (std::size_t m = 0; m < order; ++m) {
    if (identity[m]) r[m] = y.dim(m);
  }
  const auto plan = detail::make_plan(y, designs, r, identity);
  validate_ranks(y, plan);

  const DenseTensor compressed = detail::compress(y, plan);
  const std::vector<Matrix> init = init_internal(compressed, plan);
  IterateResult it = iterate_internal(compressed, plan, init, opts.iteration);

  std::vector<double> scales(order);
  for (std::size_t m = 0; m < order; ++m) scales[m] = plan[m].scale;
  const DenseTensor core_tilde = core_internal(y, it.loadings, scales);
  Calibration cal = calibrate(core_tilde, it.loadings, identity);
  LoadingEstimates est = estimate_loadings(y, designs, cal.core, cal.loadings, identity);

  StefaFit fit;
  fit.core = std::move(cal.core);
  fit.g_loadings = std::move(cal.loadings);
  fit.a_loadings = std::move(est.a);
  fit.gamma = std::move(est.gamma);
  fit.sieve_coeffs = std::move(est.sieve_coeffs);
  fit.basis.resize(order);
  for (std::size_t m = 0; m < order; ++m) {
    if (plan[m].kind == ModeKind::projected) fit.basis[m] = plan[m].design->spec;
  }
  fit.identity_modes = identity;
  fit.ranks = TuckerRanks{r};
  fit.iterations_used = it.iterations;
  fit.converged = it.converged;
  fit.subspace_change_trace = std::move(it.subspace_change_trace);
  fit.objective_trace = std::move(it.objective_trace);

  fit.diagnostics.resize(order);
  for (std::size_t m = 0; m < order; ++m) {
    ModeDiagnostics& d = fit.diagnostics[m];
    d.identification_unstable = cal.unstable[m];
    d.calibration_offdiag = relative_offdiag(mode_gram(fit.core, m));
    if (identity[m]) continue;
    const Matrix& g = fit.g_loadings[m];
    const auto rm = static_cast<Eigen::Index>(r[m]);
    d.orthonormality_residual =
        (g.transpose() * g / static_cast<double>(y.dim(m)) - Matrix::Identity(rm, rm)).norm();
    if (plan[m].kind == ModeKind::projected) {
      const SieveDesign& des = *plan[m].design;
      d.span_residual = complement_apply(des, g).norm() / std::max(g.norm(), 1e-300);
      const double denom = des.phi.norm() * fit.gamma[m].norm();
      d.gamma_orthogonality =
          denom > 0.0 ? (des.phi.transpose() * fit.gamma[m]).norm() / denom : 0.0;
    }
  }
  return fit;
}

}  // namespace stefa
