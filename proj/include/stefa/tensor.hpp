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

#include <Eigen/Dense>
#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stefa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Extents = std::vector<std::size_t>;

/// Dense order-M real tensor.
///
/// Values are stored lexicographically with the last index varying fastest.
/// Modes are 0-based throughout the C++ API.
class DenseTensor {
 public:
  DenseTensor() = default;

  /// Zero tensor with the given extents. Every extent must be positive.
  explicit DenseTensor(Extents dims);

  /// Takes ownership of `values`; its length must equal the product of dims.
  DenseTensor(Extents dims, std::vector<double> values);

  std::size_t order() const { return dims_.size(); }
  const Extents& dims() const { return dims_; }
  std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  double& operator()(std::initializer_list<std::size_t> index);
  double operator()(std::initializer_list<std::size_t> index) const;
  double& at(std::span<const std::size_t> index);
  double at(std::span<const std::size_t> index) const;

  /// Product of extents strictly before / after `mode`.
  std::size_t leading(std::size_t mode) const;
  std::size_t trailing(std::size_t mode) const;

  double frobenius_norm() const;
  double squared_norm() const;

  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);
  DenseTensor& operator*=(double s);

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::size_t offset(std::span<const std::size_t> index) const;

  Extents dims_;
  std::vector<double> values_;
};

DenseTensor operator+(DenseTensor a, const DenseTensor& b);
DenseTensor operator-(DenseTensor a, const DenseTensor& b);
DenseTensor operator*(double s, DenseTensor a);

double inner_product(const DenseTensor& a, const DenseTensor& b);

/// Per-mode Tucker (multilinear) ranks.
struct TuckerRanks {
  std::vector<std::size_t> ranks;

  std::size_t order() const { return ranks.size(); }
  std::size_t operator[](std::size_t m) const { return ranks.at(m); }

  /// Checks 1 <= R_m <= I_m and R_m <= prod_{n != m} R_n. Throws
  /// ArgumentError naming the offending mode (1-based in the message).
  void validate(const Extents& dims) const;

  friend bool operator==(const TuckerRanks&, const TuckerRanks&) = default;
};

/// Mode-m unfolding: I_m x prod_{n != m} I_n. The remaining modes are laid out
/// in ascending order with the first remaining mode varying fastest, so for an
/// order-3 tensor column i2 + i3 * I2 of the mode-0 unfolding holds s(i1,i2,i3).
Matrix matricize(const DenseTensor& t, std::size_t mode);

/// Inverse of matricize.
DenseTensor tensorize(const Matrix& mat, std::size_t mode, const Extents& dims);

/// t x_mode mat, i.e. out(.., k, ..) = sum_i mat(k, i) t(.., i, ..).
DenseTensor mode_product(const DenseTensor& t, const Matrix& mat, std::size_t mode);

/// Applies every present matrix along its mode. Contractions that shrink the
/// tensor most are applied first; the result does not depend on the order
/// beyond floating-point reassociation.
DenseTensor multi_mode_product(const DenseTensor& t,
                               std::span<const std::optional<Matrix>> mats);

/// M_m(t) M_m(t)^T without forming the unfolding.
Matrix mode_gram(const DenseTensor& t, std::size_t mode);

/// Product of the given extents.
std::size_t extent_product(const Extents& dims);

/// .tns text format: line 1 = M, line 2 = extents, then values in canonical
/// order separated by whitespace.
DenseTensor read_tns(std::istream& in);
DenseTensor read_tns_file(const std::string& path);
void write_tns(std::ostream& out, const DenseTensor& t);
void write_tns_file(const std::string& path, const DenseTensor& t);

}  // namespace stefa
