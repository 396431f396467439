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

#include "stefa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stefa/error.hpp"
#include "stefa/kernels.hpp"

namespace stefa {

std::size_t extent_product(const Extents& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

DenseTensor::DenseTensor(Extents dims) : dims_(std::move(dims)) {
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    if (dims_[m] == 0) {
      throw ArgumentError("tensor extent of mode " + std::to_string(m + 1) +
                          " must be positive");
    }
  }
  values_.assign(extent_product(dims_), 0.0);
}

DenseTensor::DenseTensor(Extents dims, std::vector<double> values)
    : DenseTensor(std::move(dims)) {
  if (values.size() != values_.size()) {
    throw ArgumentError("tensor value count " + std::to_string(values.size()) +
                        " does not match extents (expected " +
                        std::to_string(values_.size()) + ")");
  }
  values_ = std::move(values);
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) throw ArgumentError("index order mismatch");
  std::size_t off = 0;
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    if (index[m] >= dims_[m]) throw ArgumentError("tensor index out of range");
    off = off * dims_[m] + index[m];
  }
  return off;
}

double& DenseTensor::operator()(std::initializer_list<std::size_t> index) {
  return values_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double DenseTensor::operator()(std::initializer_list<std::size_t> index) const {
  return values_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double& DenseTensor::at(std::span<const std::size_t> index) { return values_[offset(index)]; }
double DenseTensor::at(std::span<const std::size_t> index) const {
  return values_[offset(index)];
}

std::size_t DenseTensor::leading(std::size_t mode) const {
  std::size_t p = 1;
  for (std::size_t m = 0; m < mode; ++m) p *= dims_.at(m);
  return p;
}

std::size_t DenseTensor::trailing(std::size_t mode) const {
  std::size_t p = 1;
  for (std::size_t m = mode + 1; m < dims_.size(); ++m) p *= dims_[m];
  return p;
}

double DenseTensor::squared_norm() const {
  return kernels::active().sum_squares(values_.data(), values_.size());
}

double DenseTensor::frobenius_norm() const { return std::sqrt(squared_norm()); }

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (other.dims_ != dims_) throw ArgumentError("tensor extents differ");
  kernels::active().axpy(1.0, other.values_.data(), values_.data(), values_.size());
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  if (other.dims_ != dims_) throw ArgumentError("tensor extents differ");
  kernels::active().axpy(-1.0, other.values_.data(), values_.data(), values_.size());
  return *this;
}

DenseTensor& DenseTensor::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

double inner_product(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw ArgumentError("tensor extents differ");
  return kernels::active().dot(a.data(), b.data(), a.size());
}

void TuckerRanks::validate(const Extents& dims) const {
  if (ranks.size() != dims.size()) {
    throw ArgumentError("expected " + std::to_string(dims.size()) + " ranks, got " +
                        std::to_string(ranks.size()));
  }
  for (std::size_t m = 0; m < ranks.size(); ++m) {
    const std::string mode = "mode " + std::to_string(m + 1);
    if (ranks[m] < 1) throw ArgumentError("rank of " + mode + " must be at least 1");
    if (ranks[m] > dims[m]) {
      throw ArgumentError("rank of " + mode + " exceeds its extent " +
                          std::to_string(dims[m]));
    }
    std::size_t others = 1;
    for (std::size_t n = 0; n < ranks.size(); ++n) {
      if (n != m) others *= ranks[n];
    }
    if (ranks.size() > 1 && ranks[m] > others) {
      throw ArgumentError("rank of " + mode +
                          " exceeds the product of the other ranks");
    }
  }
}

namespace {

void check_mode(const DenseTensor& t, std::size_t mode) {
  if (mode >= t.order()) {
    throw ArgumentError("mode " + std::to_string(mode + 1) + " out of range for order-" +
                        std::to_string(t.order()) + " tensor");
  }
}

// Column index of the unfolding for a full multi-index.
struct UnfoldingStrides {
  std::vector<std::size_t> col_stride;  // 0 for the unfolded mode

  UnfoldingStrides(const Extents& dims, std::size_t mode) : col_stride(dims.size(), 0) {
    std::size_t s = 1;
    for (std::size_t n = 0; n < dims.size(); ++n) {
      if (n == mode) continue;
      col_stride[n] = s;
      s *= dims[n];
    }
  }
};

}  // namespace

Matrix matricize(const DenseTensor& t, std::size_t mode) {
  check_mode(t, mode);
  const Extents& dims = t.dims();
  const std::size_t rows = dims[mode];
  const std::size_t cols = t.size() / rows;
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  UnfoldingStrides strides(dims, mode);
  std::vector<std::size_t> idx(dims.size(), 0);
  const double* v = t.data();
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    std::size_t col = 0;
    for (std::size_t n = 0; n < dims.size(); ++n) col += idx[n] * strides.col_stride[n];
    out(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(col)) = v[flat];
    for (std::size_t n = dims.size(); n-- > 0;) {
      if (++idx[n] < dims[n]) break;
      idx[n] = 0;
    }
  }
  return out;
}

DenseTensor tensorize(const Matrix& mat, std::size_t mode, const Extents& dims) {
  if (mode >= dims.size()) throw ArgumentError("mode out of range");
  DenseTensor out(dims);
  const std::size_t rows = dims[mode];
  const std::size_t cols = out.size() / rows;
  if (static_cast<std::size_t>(mat.rows()) != rows ||
      static_cast<std::size_t>(mat.cols()) != cols) {
    throw ArgumentError("matrix shape " + std::to_string(mat.rows()) + "x" +
                        std::to_string(mat.cols()) + " does not match unfolding " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }
  UnfoldingStrides strides(dims, mode);
  std::vector<std::size_t> idx(dims.size(), 0);
  double* v = out.data();
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t col = 0;
    for (std::size_t n = 0; n < dims.size(); ++n) col += idx[n] * strides.col_stride[n];
    v[flat] = mat(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(col));
    for (std::size_t n = dims.size(); n-- > 0;) {
      if (++idx[n] < dims[n]) break;
      idx[n] = 0;
    }
  }
  return out;
}

namespace {

constexpr std::size_t kChunk = 1024;

// out(l, a, r) = sum_i rows[a][i] * t(l, i, r) on the (left, n, right) view.
void contract(const double* t, std::size_t left, std::size_t n, std::size_t right,
              const std::vector<double>& mat_rows, std::size_t k, double* out) {
  const auto& kt = kernels::active();
  if (right == 1) {
    for (std::size_t l = 0; l < left; ++l) {
      const double* x = t + l * n;
      double* o = out + l * k;
      std::size_t a = 0;
      for (; a + 4 <= k; a += 4) {
        const double* ys[4] = {&mat_rows[a * n], &mat_rows[(a + 1) * n],
                               &mat_rows[(a + 2) * n], &mat_rows[(a + 3) * n]};
        kt.dot4(x, ys, n, o + a);
      }
      for (; a < k; ++a) o[a] = kt.dot(x, &mat_rows[a * n], n);
    }
    return;
  }
  for (std::size_t l = 0; l < left; ++l) {
    const double* block = t + l * n * right;
    double* oblock = out + l * k * right;
    for (std::size_t r0 = 0; r0 < right; r0 += kChunk) {
      const std::size_t len = std::min(kChunk, right - r0);
      for (std::size_t a = 0; a < k; ++a) {
        double* y = oblock + a * right + r0;
        const double* coef = &mat_rows[a * n];
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4) {
          const double* xs[4] = {block + i * right + r0, block + (i + 1) * right + r0,
                                 block + (i + 2) * right + r0, block + (i + 3) * right + r0};
          kt.axpy4(coef + i, xs, y, len);
        }
        for (; i < n; ++i) kt.axpy(coef[i], block + i * right + r0, y, len);
      }
    }
  }
}

std::vector<double> row_major(const Matrix& m) {
  std::vector<double> rows(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      rows.data(), m.rows(), m.cols()) = m;
  return rows;
}

}  // namespace

DenseTensor mode_product(const DenseTensor& t, const Matrix& mat, std::size_t mode) {
  check_mode(t, mode);
  const std::size_t n = t.dim(mode);
  if (static_cast<std::size_t>(mat.cols()) != n) {
    throw ArgumentError("mode product: matrix has " + std::to_string(mat.cols()) +
                        " columns but mode " + std::to_string(mode + 1) + " has extent " +
                        std::to_string(n));
  }
  if (mat.rows() == 0) throw ArgumentError("mode product: matrix has no rows");
  Extents out_dims = t.dims();
  const auto k = static_cast<std::size_t>(mat.rows());
  out_dims[mode] = k;
  DenseTensor out(out_dims);
  contract(t.data(), t.leading(mode), n, t.trailing(mode), row_major(mat), k, out.data());
  return out;
}

DenseTensor multi_mode_product(const DenseTensor& t,
                               std::span<const std::optional<Matrix>> mats) {
  if (mats.size() != t.order()) throw ArgumentError("one optional matrix per mode required");
  std::vector<std::size_t> pending;
  for (std::size_t m = 0; m < mats.size(); ++m) {
    if (mats[m].has_value()) {
      if (static_cast<std::size_t>(mats[m]->cols()) != t.dim(m)) {
        throw ArgumentError("mode product: matrix for mode " + std::to_string(m + 1) +
                            " has wrong column count");
      }
      pending.push_back(m);
    }
  }
  // Shrink first: order by rows/cols ratio, ties by mode index.
  std::stable_sort(pending.begin(), pending.end(), [&](std::size_t a, std::size_t b) {
    const double ra = static_cast<double>(mats[a]->rows()) / static_cast<double>(mats[a]->cols());
    const double rb = static_cast<double>(mats[b]->rows()) / static_cast<double>(mats[b]->cols());
    return ra < rb;
  });
  if (pending.empty()) return t;
  DenseTensor cur = mode_product(t, *mats[pending.front()], pending.front());
  for (std::size_t i = 1; i < pending.size(); ++i) {
    cur = mode_product(cur, *mats[pending[i]], pending[i]);
  }
  return cur;
}

Matrix mode_gram(const DenseTensor& t, std::size_t mode) {
  check_mode(t, mode);
  const auto& kt = kernels::active();
  const std::size_t n = t.dim(mode);
  const std::size_t left = t.leading(mode);
  const std::size_t right = t.trailing(mode);
  const std::size_t ncols = left * right;
  const std::size_t width = std::min<std::size_t>(512, ncols);
  std::vector<double> panel(n * width);
  std::vector<double> gram(n * n, 0.0);
  const double* v = t.data();

  for (std::size_t c0 = 0; c0 < ncols; c0 += width) {
    const std::size_t w = std::min(width, ncols - c0);
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t c = c0 + j;
      const std::size_t l = c / right;
      const std::size_t r = c % right;
      const double* src = v + l * n * right + r;
      for (std::size_t i = 0; i < n; ++i) panel[i * w + j] = src[i * right];
    }
    for (std::size_t a = 0; a < n; ++a) {
      const double* xa = &panel[a * w];
      double* grow = &gram[a * n];
      std::size_t b = a;
      for (; b + 4 <= n; b += 4) {
        const double* ys[4] = {&panel[b * w], &panel[(b + 1) * w], &panel[(b + 2) * w],
                               &panel[(b + 3) * w]};
        double s[4];
        kt.dot4(xa, ys, w, s);
        grow[b] += s[0];
        grow[b + 1] += s[1];
        grow[b + 2] += s[2];
        grow[b + 3] += s[3];
      }
      for (; b < n; ++b) grow[b] += kt.dot(xa, &panel[b * w], w);
    }
  }
  Matrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      g(ia, ib) = gram[a * n + b];
      g(ib, ia) = gram[a * n + b];
    }
  }
  return g;
}

}  // namespace stefa
