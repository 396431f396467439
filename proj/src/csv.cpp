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


#include "stefa/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "stefa/error.hpp"

namespace stefa {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  while (std::getline(in, line) && blank(line)) {
  }
  if (blank(line)) throw ArgumentError("csv: missing header row");
  table.columns = split_fields(line);
  const std::size_t ncol = table.columns.size();

  std::vector<double> flat;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != ncol) {
      throw ArgumentError("csv line " + std::to_string(lineno) + ": expected " +
                          std::to_string(ncol) + " fields, got " + std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ArgumentError("csv line " + std::to_string(lineno) + ": non-numeric field '" + f +
                            "'");
      }
      flat.push_back(v);
    }
    ++rows;
  }
  table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ncol));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < ncol; ++j) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * ncol + j];
    }
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path);
  try {
    return read_csv(in);
  } catch (const ArgumentError& e) {
    throw ArgumentError(path + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const Matrix& values, std::vector<std::string> columns) {
  if (columns.empty()) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) columns.push_back("c" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(columns.size()) != values.cols()) {
    throw ArgumentError("csv: header does not match column count");
  }
  for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << format_double(values(i, j));
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Matrix& values,
                    std::vector<std::string> columns) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path);
  write_csv(out, values, std::move(columns));
}

}  // namespace stefa
