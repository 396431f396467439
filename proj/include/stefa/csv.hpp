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

#include <iosfwd>
#include <string>
#include <vector>

#include "stefa/tensor.hpp"

namespace stefa {

/// Numeric table with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  Matrix values;
};

/// Parses a comma-separated file whose first row names the columns and whose
/// remaining rows are all numeric. Blank trailing lines are ignored.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Writes `values` with a header row. When `columns` is empty the header is
/// c1, c2, ... Numbers use the shortest round-trip representation.
void write_csv(std::ostream& out, const Matrix& values, std::vector<std::string> columns = {});
void write_csv_file(const std::string& path, const Matrix& values,
                    std::vector<std::string> columns = {});

/// Shortest round-trip decimal form of `v`.
std::string format_double(double v);

}  // namespace stefa
