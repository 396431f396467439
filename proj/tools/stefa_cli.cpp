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


// Command-line front end: fit, ranks, predict, simulate, generate.
// Exit codes: 0 success, 2 usage or input errors, 3 numeric failures.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stefa/csv.hpp"
#include "stefa/error.hpp"
#include "stefa/estimator.hpp"
#include "stefa/experiments.hpp"
#include "stefa/fit_io.hpp"
#include "stefa/prediction.hpp"
#include "stefa/simlab.hpp"
#include "stefa/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw stefa::ArgumentError("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

class Manifest {
 public:
  explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["version"] = std::string(stefa::kVersion);
    j_["options"] = json::object();
    j_["inputs"] = json::object();
  }
  void option(const std::string& key, json value) { j_["options"][key] = std::move(value); }
  void input(const std::string& path) { j_["inputs"][path] = "fnv1a64:" + hex64(fnv1a64_file(path)); }
  void set(const std::string& key, json value) { j_[key] = std::move(value); }
  void timing(const std::string& phase) {
    j_["timings_seconds"][phase] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void write(const fs::path& dir) {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw stefa::ArgumentError("cannot write " + (dir / "manifest.json").string());
    out << j_.dump(2) << '\n';
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw stefa::ArgumentError("invalid " + what + " '" + text + "'");
    }
    out.push_back(v);
  }
  return out;
}

struct CovariateArg {
  std::size_t mode = 0;  // 0-based
  std::string path;
};

std::vector<CovariateArg> parse_covariates(const std::vector<std::string>& args,
                                           std::size_t order) {
  std::vector<CovariateArg> out;
  for (const std::string& a : args) {
    const auto colon = a.find(':');
    if (colon == std::string::npos) {
      throw stefa::ArgumentError("--covariates expects MODE:FILE, got '" + a + "'");
    }
    const auto modes = parse_size_list(a.substr(0, colon), "covariate mode");
    if (modes.size() != 1 || modes[0] < 1 || modes[0] > order) {
      throw stefa::ArgumentError("--covariates mode out of range in '" + a + "'");
    }
    for (const auto& prev : out) {
      if (prev.mode == modes[0] - 1) {
        throw stefa::ArgumentError("duplicate covariates for mode " + std::to_string(modes[0]));
      }
    }
    out.push_back(CovariateArg{modes[0] - 1, a.substr(colon + 1)});
  }
  return out;
}

std::vector<bool> parse_identity(const std::string& text, std::size_t order) {
  std::vector<bool> out(order, false);
  if (text.empty()) return out;
  for (std::size_t m : parse_size_list(text, "identity mode list")) {
    if (m < 1 || m > order) {
      throw stefa::ArgumentError("identity mode " + std::to_string(m) + " out of range");
    }
    out[m - 1] = true;
  }
  return out;
}

struct ModelInputs {
  stefa::DenseTensor y;
  stefa::Designs designs;
  std::vector<CovariateArg> covariates;
  std::vector<bool> identity;
};

ModelInputs load_inputs(const std::string& tensor, const std::vector<std::string>& cov_args,
                        const std::string& basis, const std::string& identity,
                        Manifest& manifest) {
  ModelInputs in;
  in.y = stefa::read_tns_file(tensor);
  manifest.input(tensor);
  in.covariates = parse_covariates(cov_args, in.y.order());
  in.identity = parse_identity(identity, in.y.order());
  const stefa::BasisSpec spec = stefa::parse_basis(basis);
  in.designs.resize(in.y.order());
  for (const auto& c : in.covariates) {
    const stefa::CsvTable table = stefa::read_csv_file(c.path);
    manifest.input(c.path);
    if (static_cast<std::size_t>(table.values.rows()) != in.y.dim(c.mode)) {
      throw stefa::ArgumentError("covariates for mode " + std::to_string(c.mode + 1) + " have " +
                                 std::to_string(table.values.rows()) + " rows, tensor extent is " +
                                 std::to_string(in.y.dim(c.mode)));
    }
    in.designs[c.mode] = stefa::build_design(table.values, spec);
  }
  return in;
}

std::optional<stefa::TuckerRanks> parse_ranks(const std::string& text, std::size_t order) {
  if (text == "auto") return std::nullopt;
  stefa::TuckerRanks r{parse_size_list(text, "rank list")};
  if (r.order() != order) {
    throw stefa::ArgumentError("--ranks needs " + std::to_string(order) + " values, got " +
                               std::to_string(r.order()));
  }
  for (std::size_t m = 0; m < order; ++m) {
    if (r[m] == 0) {
      throw stefa::ArgumentError("--ranks: rank of mode " + std::to_string(m + 1) +
                                 " must be at least 1");
    }
  }
  return r;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string tensor;
  std::vector<std::string> covariates;
  std::string ranks = "auto";
  std::string basis = "legendre:4";
  std::string identity;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t max_iter = 50;
  double tol = 1e-8;
  std::optional<std::size_t> kmax;
};

int cmd_fit(const FitArgs& a) {
  Manifest manifest("fit");
  const std::uint64_t seed = resolve_seed(a.seed);
  ModelInputs in = load_inputs(a.tensor, a.covariates, a.basis, a.identity, manifest);
  auto ranks = parse_ranks(a.ranks, in.y.order());

  stefa::FitOptions opts;
  opts.iteration.max_iter = a.max_iter;
  opts.iteration.tol = a.tol;
  opts.identity_modes = in.identity;
  opts.kmax = a.kmax;

  stefa::FitBundle bundle;
  if (!ranks) {
    bundle.rank_selection = stefa::estimate_ranks(in.y, in.designs, a.kmax, in.identity);
    ranks = bundle.rank_selection->ranks;
  }
  bundle.fit = stefa::fit_stefa(in.y, in.designs, ranks, opts);
  bundle.designs = in.designs;
  manifest.timing("fit");
  if (!in.covariates.empty()) {
    bool plain = true;
    for (bool b : in.identity) plain = plain && !b;
    if (plain) bundle.baseline = stefa::hooi(in.y, *ranks, opts.iteration);
    manifest.timing("baseline");
  }

  const fs::path out(a.out);
  stefa::save_fit(a.out, bundle);
  for (const auto& c : in.covariates) {
    fs::copy_file(c.path, out / ("covariates_" + std::to_string(c.mode + 1) + ".csv"),
                  fs::copy_options::overwrite_existing);
  }
  manifest.option("tensor", a.tensor);
  manifest.option("covariates", a.covariates);
  manifest.option("ranks", a.ranks);
  manifest.option("resolved_ranks", bundle.fit.ranks.ranks);
  manifest.option("basis", a.basis);
  manifest.option("identity_modes", a.identity);
  manifest.option("max_iter", a.max_iter);
  manifest.option("tol", a.tol);
  if (a.kmax) manifest.option("kmax", *a.kmax);
  manifest.set("seed", seed);
  manifest.timing("total");
  manifest.write(out);

  std::cout << "ranks";
  for (std::size_t r : bundle.fit.ranks.ranks) std::cout << ' ' << r;
  std::cout << "\niterations " << bundle.fit.iterations_used
            << (bundle.fit.converged ? " (converged)" : " (max_iter reached)") << '\n';
  if (in.covariates.empty()) std::cout << "no sieve projection: no covariates given\n";
  return 0;
}

// ---- ranks ----------------------------------------------------------------

struct RanksArgs {
  std::string tensor;
  std::vector<std::string> covariates;
  std::string basis = "legendre:4";
  std::string identity;
  std::optional<std::size_t> kmax;
  std::string out;
};

int cmd_ranks(const RanksArgs& a) {
  Manifest manifest("ranks");
  ModelInputs in = load_inputs(a.tensor, a.covariates, a.basis, a.identity, manifest);
  const stefa::RankEstimate est = stefa::estimate_ranks(in.y, in.designs, a.kmax, in.identity);

  std::ostringstream csv;
  csv << "mode,k,lambda_k,ratio\n";
  for (std::size_t m = 0; m < est.ranks.order(); ++m) {
    for (std::size_t k = 1; k <= est.ratios[m].size(); ++k) {
      csv << m + 1 << ',' << k << ',' << stefa::format_double(est.eigenvalues[m][k - 1]) << ','
          << stefa::format_double(est.ratios[m][k - 1]) << '\n';
    }
  }
  for (std::size_t m = 0; m < est.ranks.order(); ++m) std::cout << (m ? " " : "") << est.ranks[m];
  std::cout << '\n' << csv.str();

  if (!a.out.empty()) {
    const fs::path out(a.out);
    fs::create_directories(out);
    std::ofstream(out / "ratios.csv") << csv.str();
    manifest.option("tensor", a.tensor);
    manifest.option("covariates", a.covariates);
    manifest.option("basis", a.basis);
    manifest.option("identity_modes", a.identity);
    if (a.kmax) manifest.option("kmax", *a.kmax);
    manifest.set("ranks", est.ranks.ranks);
    manifest.timing("total");
    manifest.write(out);
  }
  return 0;
}

// ---- predict --------------------------------------------------------------

struct PredictArgs {
  std::string fit;
  std::string new_covariates;
  std::vector<std::string> covariates;
  std::string method = "stefa";
  std::string bandwidth = "auto";
  std::string kernel = "gaussian";
  std::size_t mode = 1;
  std::string out;
};

int cmd_predict(const PredictArgs& a) {
  Manifest manifest("predict");
  const stefa::FitBundle bundle = stefa::load_fit(a.fit);
  manifest.input((fs::path(a.fit) / "report.json").string());
  const std::size_t order = bundle.fit.core.order();
  if (a.mode < 1 || a.mode > order) {
    throw stefa::ArgumentError("--mode must lie in 1.." + std::to_string(order));
  }
  const std::size_t mode = a.mode - 1;
  const stefa::CsvTable x_new = stefa::read_csv_file(a.new_covariates);
  manifest.input(a.new_covariates);

  stefa::KernelSpec kernel;
  kernel.family = stefa::parse_kernel_family(a.kernel);
  if (a.bandwidth != "auto") {
    double h = 0.0;
    const auto res = std::from_chars(a.bandwidth.data(), a.bandwidth.data() + a.bandwidth.size(), h);
    if (res.ec != std::errc() || res.ptr != a.bandwidth.data() + a.bandwidth.size()) {
      throw stefa::ArgumentError("--bandwidth expects 'auto' or a positive number");
    }
    kernel.bandwidth = h;
  }

  stefa::Prediction pred;
  if (a.method == "stefa") {
    pred = stefa::predict_stefa(bundle.fit, bundle.designs, x_new.values, kernel, mode);
  } else if (a.method == "vanilla") {
    stefa::Matrix x_train;
    if (bundle.designs[mode]) {
      x_train = bundle.designs[mode]->covariates;
    } else {
      for (const auto& c : parse_covariates(a.covariates, order)) {
        if (c.mode == mode) {
          x_train = stefa::read_csv_file(c.path).values;
          manifest.input(c.path);
        }
      }
      if (x_train.size() == 0) {
        throw stefa::ArgumentError("vanilla prediction needs training covariates for mode " +
                                   std::to_string(a.mode) + " (--covariates " +
                                   std::to_string(a.mode) + ":FILE)");
      }
    }
    if (bundle.baseline) {
      pred = stefa::predict_vanilla(*bundle.baseline, x_train, x_new.values, kernel, mode);
    } else {
      pred = stefa::predict_vanilla(bundle.fit.core, bundle.fit.a_loadings, x_train,
                                    x_new.values, kernel, mode);
    }
  } else {
    throw stefa::ArgumentError("--method must be stefa or vanilla");
  }

  const fs::path out(a.out);
  fs::create_directories(out);
  stefa::write_tns_file((out / "prediction.tns").string(), pred.values);
  json report;
  report["method"] = a.method;
  report["mode"] = a.mode;
  report["kernel"] = a.kernel;
  report["bandwidth"] = pred.bandwidth;
  report["bandwidth_rule"] = a.bandwidth == "auto" ? "median pairwise distance" : "user";
  report["fallback_rows"] = pred.fallback_rows;
  report["dims"] = pred.values.dims();
  std::ofstream(out / "report.json") << report.dump(2) << '\n';

  manifest.option("fit", a.fit);
  manifest.option("new_covariates", a.new_covariates);
  manifest.option("method", a.method);
  manifest.option("bandwidth", a.bandwidth);
  manifest.option("kernel", a.kernel);
  manifest.option("mode", a.mode);
  manifest.timing("total");
  manifest.write(out);
  std::cout << "bandwidth " << stefa::format_double(pred.bandwidth) << "\nfallback_rows "
            << pred.fallback_rows << '\n';
  return 0;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string protocol;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
  std::vector<std::string> cells;
  std::optional<double> kappa;
};

int cmd_simulate(const SimulateArgs& a) {
  stefa::ExperimentSpec spec;
  std::optional<std::string> spec_file;
  if (fs::exists(a.protocol) && fs::is_regular_file(a.protocol)) {
    std::ifstream in(a.protocol);
    std::stringstream ss;
    ss << in.rdbuf();
    spec = stefa::parse_experiment_spec(ss.str());
    spec_file = a.protocol;
  } else {
    spec.protocol = a.protocol;
  }
  if (a.reps) spec.reps = *a.reps;
  if (a.threads) spec.threads = *a.threads;
  if (!a.cells.empty()) spec.cells = a.cells;
  if (a.kappa) spec.kappa = *a.kappa;
  if (a.seed) {
    spec.seed = *a.seed;
  } else if (!spec_file) {
    spec.seed = resolve_seed(std::nullopt);
  }
  stefa::protocol_cells(spec.protocol);  // rejects unknown names before any work

  const stefa::ExperimentResult result = stefa::run_experiment(spec);
  const fs::path out(a.out);
  fs::create_directories(out);
  {
    std::ofstream csv(out / "summary.csv");
    stefa::write_summary_csv(csv, result);
    std::ofstream values(out / "values.csv");
    stefa::write_values_csv(values, result);
  }
  json m = json::parse(stefa::manifest_json(result));
  if (spec_file) {
    m["inputs"][*spec_file] = "fnv1a64:" + hex64(fnv1a64_file(*spec_file));
  }
  m["outputs"] = {{"summary.csv", "fnv1a64:" + hex64(fnv1a64_file((out / "summary.csv").string()))},
                  {"values.csv", "fnv1a64:" + hex64(fnv1a64_file((out / "values.csv").string()))}};
  std::ofstream(out / "manifest.json") << m.dump(2) << '\n';
  stefa::write_summary_csv(std::cout, result);
  return 0;
}

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
  std::string dims = "20,20,20";
  std::size_t rank = 3;
  std::size_t covariates = 2;
  double alpha = 0.5;
  std::size_t j_star = 4;
  double kappa = 0.5;
  double tau = 0.0;
  std::string scheme = "additive";
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  Manifest manifest("generate");
  stefa::SimConfig cfg;
  cfg.dims = parse_size_list(a.dims, "dims");
  cfg.rank = a.rank;
  cfg.covariates = a.covariates;
  cfg.alpha = a.alpha;
  cfg.j_star = a.j_star;
  cfg.kappa = a.kappa;
  cfg.tau = a.tau;
  cfg.scheme = stefa::parse_scheme(a.scheme);
  cfg.seed = resolve_seed(a.seed);
  const stefa::SimInstance inst = stefa::generate(cfg);

  const fs::path out(a.out);
  fs::create_directories(out);
  stefa::write_tns_file((out / "y.tns").string(), inst.y);
  stefa::write_tns_file((out / "signal.tns").string(), inst.signal);
  std::vector<std::string> names;
  for (std::size_t d = 0; d < cfg.covariates; ++d) names.push_back("x" + std::to_string(d + 1));
  for (std::size_t m = 0; m < inst.x.size(); ++m) {
    const std::string k = std::to_string(m + 1);
    stefa::write_csv_file((out / ("covariates_" + k + ".csv")).string(), inst.x[m], names);
    stefa::write_csv_file((out / ("A_" + k + ".csv")).string(), inst.a[m]);
  }
  manifest.option("dims", cfg.dims);
  manifest.option("rank", cfg.rank);
  manifest.option("covariates", cfg.covariates);
  manifest.option("alpha", cfg.alpha);
  manifest.option("j_star", cfg.j_star);
  manifest.option("kappa", cfg.kappa);
  manifest.option("tau", cfg.tau);
  manifest.option("scheme", a.scheme);
  manifest.set("seed", cfg.seed);
  manifest.timing("total");
  manifest.write(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiparametric tensor factor analysis (IP-SVD) with a HOOI baseline"};
  app.set_version_flag("--version", std::string(stefa::kVersion));
  app.require_subcommand(1);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit the model and write a fit directory");
  f->add_option("--tensor", fit.tensor, "Observation tensor (.tns)")->required();
  f->add_option("--covariates", fit.covariates, "MODE:FILE covariate CSV (1-based mode)");
  f->add_option("--ranks", fit.ranks, "r1,r2,r3 or auto")->capture_default_str();
  f->add_option("--basis", fit.basis, "Sieve basis, e.g. legendre:4")->capture_default_str();
  f->add_option("--identity-modes", fit.identity, "Modes kept uncompressed, e.g. 3");
  f->add_option("--out", fit.out, "Output directory")->required();
  f->add_option("--seed", fit.seed, "Seed recorded in the manifest");
  f->add_option("--max-iter", fit.max_iter)->capture_default_str();
  f->add_option("--tol", fit.tol)->capture_default_str();
  f->add_option("--kmax", fit.kmax, "Rank selection cap");

  RanksArgs ranks;
  auto* r = app.add_subcommand("ranks", "Eigenvalue-ratio rank selection");
  r->add_option("--tensor", ranks.tensor)->required();
  r->add_option("--covariates", ranks.covariates, "MODE:FILE covariate CSV (1-based mode)");
  r->add_option("--basis", ranks.basis)->capture_default_str();
  r->add_option("--identity-modes", ranks.identity);
  r->add_option("--kmax", ranks.kmax);
  r->add_option("--out", ranks.out, "Optional directory for ratios.csv and a manifest");

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "Predict slices for new covariate rows");
  p->add_option("--fit", pred.fit, "Fit directory")->required();
  p->add_option("--new-covariates", pred.new_covariates)->required();
  p->add_option("--covariates", pred.covariates, "Training covariates when the fit has none");
  p->add_option("--method", pred.method, "stefa or vanilla")->capture_default_str();
  p->add_option("--bandwidth", pred.bandwidth, "auto or a positive number")->capture_default_str();
  p->add_option("--kernel", pred.kernel, "gaussian or epanechnikov")->capture_default_str();
  p->add_option("--mode", pred.mode, "Covariate mode (1-based)")->capture_default_str();
  p->add_option("--out", pred.out)->required();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run a simulation protocol");
  s->add_option("--protocol", sim.protocol, "Protocol name or JSON spec file")->required();
  s->add_option("--reps", sim.reps);
  s->add_option("--seed", sim.seed);
  s->add_option("--out", sim.out)->required();
  s->add_option("--threads", sim.threads);
  s->add_option("--cell", sim.cells, "Restrict to a cell label (repeatable)");
  s->add_option("--kappa", sim.kappa, "Generator decay coefficient");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write one simulated instance");
  g->add_option("--dims", gen.dims)->capture_default_str();
  g->add_option("--rank", gen.rank)->capture_default_str();
  g->add_option("--covariates", gen.covariates)->capture_default_str();
  g->add_option("--alpha", gen.alpha)->capture_default_str();
  g->add_option("--j-star", gen.j_star)->capture_default_str();
  g->add_option("--kappa", gen.kappa)->capture_default_str();
  g->add_option("--tau", gen.tau)->capture_default_str();
  g->add_option("--scheme", gen.scheme)->capture_default_str();
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*f) return cmd_fit(fit);
    if (*r) return cmd_ranks(ranks);
    if (*p) return cmd_predict(pred);
    if (*s) return cmd_simulate(sim);
    if (*g) return cmd_generate(gen);
  } catch (const stefa::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const stefa::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
