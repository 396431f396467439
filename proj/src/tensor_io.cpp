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

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "stefa/error.hpp"
#include "stefa/tensor.hpp"

namespace stefa {
namespace {

bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

DenseTensor read_tns(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw ArgumentError("tns: missing order line");
  std::size_t order = 0;
  {
    std::istringstream ls(line);
    long long m = 0;
    if (!(ls >> m) || m <= 0) throw ArgumentError("tns: invalid order '" + line + "'");
    std::string extra;
    if (ls >> extra) throw ArgumentError("tns: unexpected token on order line");
    order = static_cast<std::size_t>(m);
  }
  if (!next_line(in, line)) throw ArgumentError("tns: missing extents line");
  Extents dims;
  {
    std::istringstream ls(line);
    long long e = 0;
    while (ls >> e) {
      if (e <= 0) throw ArgumentError("tns: extents must be positive");
      dims.push_back(static_cast<std::size_t>(e));
    }
    if (!ls.eof()) throw ArgumentError("tns: malformed extents line");
    if (dims.size() != order) {
      throw ArgumentError("tns: order " + std::to_string(order) + " but " +
                          std::to_string(dims.size()) + " extents");
    }
  }
  const std::size_t expected = extent_product(dims);
  std::vector<double> values;
  values.reserve(expected);
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw ArgumentError("tns: invalid value '" + tok + "'");
    }
    values.push_back(v);
    if (values.size() > expected) break;
  }
  if (values.size() != expected) {
    throw ArgumentError("tns: expected " + std::to_string(expected) + " values, found " +
                        (values.size() > expected ? "more" : std::to_string(values.size())));
  }
  return DenseTensor(std::move(dims), std::move(values));
}

DenseTensor read_tns_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open tensor file '" + path + "'");
  return read_tns(in);
}

void write_tns(std::ostream& out, const DenseTensor& t) {
  out << t.order() << '\n';
  for (std::size_t m = 0; m < t.order(); ++m) out << (m ? " " : "") << t.dim(m);
  out << '\n';
  // Shortest round-trip representation; one mode-(M-1) fiber per line.
  const std::size_t fiber = t.order() ? t.dim(t.order() - 1) : 1;
  char buf[64];
  const auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v[i]);
    out.write(buf, res.ptr - buf);
    out.put((i + 1) % fiber == 0 ? '\n' : ' ');
  }
}

void write_tns_file(const std::string& path, const DenseTensor& t) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write tensor file '" + path + "'");
  write_tns(out, t);
}

}  // namespace stefa
