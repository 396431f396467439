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


#include "stefa/fit_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stefa/csv.hpp"
#include "stefa/error.hpp"
#include "stefa/version.hpp"

namespace stefa {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string mode_file(const std::string& stem, std::size_t m) {
  return stem + "_" + std::to_string(m + 1) + ".csv";
}

json rank_json(const RankEstimate& est) {
  json modes = json::array();
  for (std::size_t m = 0; m < est.ranks.order(); ++m) {
    modes.push_back({{"mode", m + 1},
                     {"rank", est.ranks[m]},
                     {"kmax", est.kmax[m]},
                     {"ratios", est.ratios[m]}});
  }
  return modes;
}

Matrix read_matrix(const fs::path& p) { return read_csv_file(p.string()).values; }

}  // namespace

std::string fit_report_json(const FitBundle& bundle) {
  const StefaFit& f = bundle.fit;
  const std::size_t order = f.core.order();
  json j;
  j["version"] = std::string(kVersion);
  j["dims"] = json::array();
  for (std::size_t m = 0; m < order; ++m) j["dims"].push_back(f.a_loadings[m].rows());
  j["ranks"] = f.ranks.ranks;
  json identity = json::array();
  json covariate_modes = json::array();
  json basis = json::object();
  for (std::size_t m = 0; m < order; ++m) {
    if (!f.identity_modes.empty() && f.identity_modes[m]) identity.push_back(m + 1);
    if (f.basis[m]) {
      covariate_modes.push_back(m + 1);
      basis[std::to_string(m + 1)] = to_string(*f.basis[m]);
    }
  }
  j["identity_modes"] = identity;
  j["covariate_modes"] = covariate_modes;
  j["basis"] = basis;
  j["no_sieve_projection"] = covariate_modes.empty();
  j["converged"] = f.converged;
  j["iterations"] = f.iterations_used;
  j["subspace_change_trace"] = f.subspace_change_trace;
  j["objective_trace"] = f.objective_trace;
  json diag = json::array();
  for (std::size_t m = 0; m < order; ++m) {
    const ModeDiagnostics& d = f.diagnostics.at(m);
    diag.push_back({{"mode", m + 1},
                    {"orthonormality_residual", d.orthonormality_residual},
                    {"span_residual", d.span_residual},
                    {"gamma_orthogonality", d.gamma_orthogonality},
                    {"calibration_offdiag", d.calibration_offdiag},
                    {"identification_unstable", d.identification_unstable}});
  }
  j["diagnostics"] = diag;
  if (bundle.rank_selection) j["rank_selection"] = rank_json(*bundle.rank_selection);
  if (bundle.baseline) {
    j["baseline"] = {{"method", "hooi"},
                     {"converged", bundle.baseline->converged},
                     {"iterations", bundle.baseline->iterations_used},
                     {"objective_trace", bundle.baseline->objective_trace}};
  }
  return j.dump(2);
}

void save_fit(const std::string& dir, const FitBundle& bundle) {
  const fs::path root(dir);
  fs::create_directories(root);
  const StefaFit& f = bundle.fit;
  write_tns_file((root / "core.tns").string(), f.core);
  for (std::size_t m = 0; m < f.core.order(); ++m) {
    write_csv_file((root / mode_file("G", m)).string(), f.g_loadings[m]);
    write_csv_file((root / mode_file("A", m)).string(), f.a_loadings[m]);
    write_csv_file((root / mode_file("Gamma", m)).string(), f.gamma[m]);
    if (f.sieve_coeffs[m]) write_csv_file((root / mode_file("B", m)).string(), *f.sieve_coeffs[m]);
  }
  if (bundle.baseline) {
    const fs::path h = root / "hooi";
    fs::create_directories(h);
    write_tns_file((h / "core.tns").string(), bundle.baseline->core);
    for (std::size_t m = 0; m < bundle.baseline->loadings.size(); ++m) {
      write_csv_file((h / mode_file("A", m)).string(), bundle.baseline->loadings[m]);
    }
  }
  std::ofstream out(root / "report.json");
  if (!out) throw ArgumentError("cannot write " + (root / "report.json").string());
  out << fit_report_json(bundle) << '\n';
}

FitBundle load_fit(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "report.json");
  if (!in) throw ArgumentError("not a fit directory (missing report.json): " + dir);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError("unreadable report.json: " + std::string(e.what()));
  }
  FitBundle b;
  StefaFit& f = b.fit;
  try {
    f.core = read_tns_file((root / "core.tns").string());
    const std::size_t order = f.core.order();
    f.ranks.ranks = j.at("ranks").get<std::vector<std::size_t>>();
    f.identity_modes.assign(order, false);
    for (std::size_t m : j.at("identity_modes").get<std::vector<std::size_t>>()) {
      f.identity_modes.at(m - 1) = true;
    }
    f.basis.resize(order);
    f.sieve_coeffs.resize(order);
    b.designs.resize(order);
    for (std::size_t m = 0; m < order; ++m) {
      f.g_loadings.push_back(read_matrix(root / mode_file("G", m)));
      f.a_loadings.push_back(read_matrix(root / mode_file("A", m)));
      f.gamma.push_back(read_matrix(root / mode_file("Gamma", m)));
    }
    for (std::size_t m : j.at("covariate_modes").get<std::vector<std::size_t>>()) {
      const std::size_t k = m - 1;
      const BasisSpec spec = parse_basis(j.at("basis").at(std::to_string(m)).get<std::string>());
      f.basis.at(k) = spec;
      f.sieve_coeffs.at(k) = read_matrix(root / mode_file("B", k));
      b.designs.at(k) = build_design(read_matrix(root / mode_file("covariates", k)), spec);
    }
    f.converged = j.value("converged", false);
    f.iterations_used = j.value("iterations", std::size_t{0});
    if (fs::exists(root / "hooi" / "core.tns")) {
      HooiFit h;
      h.core = read_tns_file((root / "hooi" / "core.tns").string());
      for (std::size_t m = 0; m < h.core.order(); ++m) {
        h.loadings.push_back(read_matrix(root / "hooi" / mode_file("A", m)));
      }
      b.baseline = std::move(h);
    }
  } catch (const json::exception& e) {
    throw ArgumentError("malformed report.json: " + std::string(e.what()));
  } catch (const std::out_of_range& e) {
    throw ArgumentError("malformed fit directory: " + std::string(e.what()));
  }
  return b;
}

}  // namespace stefa
