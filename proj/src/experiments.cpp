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


#include "stefa/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "stefa/csv.hpp"
#include "stefa/error.hpp"
#include "stefa/prediction.hpp"
#include "stefa/rng.hpp"
#include "stefa/version.hpp"

namespace stefa {
namespace {

struct Variant {
  std::string cell;
  std::size_t degree = 4;
  bool stefa = true;
  bool hooi = true;
  std::optional<double> amplifier;
  bool prediction = false;
};

struct Group {
  std::string name;
  SimConfig config;
  std::vector<Variant> variants;
  std::size_t loss_modes = 1;     // modes reported for l2
  bool function_losses = false;
  bool rank_check = false;
};

Variant variant(std::string cell, std::size_t degree = 4, bool hooi = true) {
  Variant v;
  v.cell = std::move(cell);
  v.degree = degree;
  v.hooi = hooi;
  return v;
}

std::string num(double v) { return format_double(v); }

std::string dims_label(const Extents& d) {
  std::string s = "(";
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
  return s + ")";
}

std::vector<Group> build_groups(const std::string& protocol, double kappa) {
  std::vector<Group> groups;
  auto base = [&](Extents dims, double alpha) {
    SimConfig c;
    c.dims = std::move(dims);
    c.alpha = alpha;
    c.kappa = kappa;
    return c;
  };
  if (protocol == "table1" || protocol == "table6_multiplicative") {
    for (double alpha : {0.1, 0.3, 0.5}) {
      for (std::size_t i : {100, 200, 300}) {
        Group g;
        g.name = "alpha=" + num(alpha) + ",I=" + std::to_string(i);
        g.config = base({i, i, i}, alpha);
        if (protocol != "table1") g.config.scheme = Scheme::multiplicative;
        g.variants.push_back(variant(g.name));
        g.function_losses = true;
        g.rank_check = protocol == "table1";
        groups.push_back(std::move(g));
      }
    }
  } else if (protocol == "table3_J_sweep") {
    for (double alpha : {0.3, 0.5}) {
      Group g;
      g.name = "alpha=" + num(alpha);
      g.config = base({200, 200, 200}, alpha);
      g.config.j_star = 16;
      for (std::size_t j : {2, 4, 8, 16}) {
        g.variants.push_back(variant(g.name + ",J=" + std::to_string(j), j, false));
      }
      groups.push_back(std::move(g));
    }
  } else if (protocol == "table4_gamma_sweep") {
    for (double tau : {0.0, 0.01, 0.1, 1.0}) {
      Group g;
      g.name = "tau=" + num(tau);
      g.config = base({200, 200, 200}, 0.5);
      g.config.tau = tau;
      g.variants.push_back(variant(g.name, 4, false));
      groups.push_back(std::move(g));
    }
  } else if (protocol == "suppC_unbalanced") {
    for (double alpha : {0.3, 0.5}) {
      for (const Extents& d : {Extents{100, 100, 200}, Extents{100, 100, 400},
                               Extents{100, 200, 200}, Extents{100, 200, 400}}) {
        Group g;
        g.name = "I=" + dims_label(d) + ",alpha=" + num(alpha);
        g.config = base(d, alpha);
        g.variants.push_back(variant(g.name));
        g.loss_modes = 3;
        groups.push_back(std::move(g));
      }
    }
  } else if (protocol == "noise_amplify") {
    Group g;
    g.name = "alpha=0.5,I=100";
    g.config = base({100, 100, 100}, 0.5);
    for (double amp : {0.0, 0.5, 1.0, 2.0}) {
      Variant v = variant("amp=" + num(amp));
      v.amplifier = amp;
      g.variants.push_back(v);
    }
    groups.push_back(std::move(g));
  } else if (protocol == "prediction_holdout") {
    Group g;
    g.name = "alpha=0.5,I=100,train=0.5";
    g.config = base({100, 100, 100}, 0.5);
    Variant v = variant(g.name);
    v.prediction = true;
    g.variants.push_back(v);
    groups.push_back(std::move(g));
  } else {
    throw ArgumentError("unknown protocol '" + protocol + "'");
  }
  return groups;
}

Designs make_designs(const SimInstance& inst, std::size_t degree) {
  BasisSpec spec;
  spec.degree = degree;
  Designs designs;
  for (const Matrix& x : inst.x) designs.emplace_back(build_design(x, spec));
  return designs;
}

using Record = std::tuple<std::string, std::string, std::string, double>;

void run_variant(const Group& group, const Variant& v, const SimInstance& inst,
                 const IterationOptions& opts, std::uint64_t seed, std::vector<Record>& out) {
  const TuckerRanks ranks{Extents(inst.config.dims.size(), inst.config.rank)};
  const Designs designs = make_designs(inst, v.degree);
  auto put = [&](const std::string& method, const std::string& metric, double value) {
    out.emplace_back(v.cell, method, metric, value);
  };

  if (v.prediction) {
    const HoldoutErrors e = prediction_holdout(inst, v.degree, 0.5, derive_seed(seed, 1), opts);
    put("ipsvd", "pred_error", e.stefa);
    put("vanilla", "pred_error", e.vanilla);
    put("ipsvd", "pred_error_observed", e.stefa_observed);
    put("vanilla", "pred_error_observed", e.vanilla_observed);
    return;
  }
  if (v.amplifier) {
    const double amp = *v.amplifier;
    const auto rows = noise_amplify_refit(inst.signal, inst.noise, designs, ranks,
                                          std::span<const double>(&amp, 1), opts);
    put("ipsvd", "remse_sq", rows[0].stefa);
    put("hooi", "remse_sq", rows[0].hooi);
    return;
  }

  if (v.stefa) {
    FitOptions fo;
    fo.iteration = opts;
    const StefaFit fit = fit_stefa(inst.y, designs, ranks, fo);
    for (std::size_t m = 0; m < group.loss_modes; ++m) {
      const std::string k = std::to_string(m + 1);
      put("ipsvd", "l2_A" + k, loss_subspace(fit.g_loadings[m], inst.a[m]));
      put("ipsvd", "l2_A" + k + "_full", loss_subspace(fit.a_loadings[m], inst.a[m]));
    }
    if (inst.config.tau > 0.0) put("ipsvd", "l2_G1", loss_subspace(fit.g_loadings[0], inst.g[0]));
    put("ipsvd", "remse", loss_remse(fit.projected_signal(), inst.signal));
    put("ipsvd", "remse_full", loss_remse(fit.signal(), inst.signal));
    put("ipsvd", "remse_obs", loss_remse(fit.projected_signal(), inst.y));
    put("ipsvd", "iterations", static_cast<double>(fit.iterations_used));
    if (group.function_losses) {
      const FunctionLosses fl =
          function_losses(*fit.basis[0], *fit.sieve_coeffs[0], inst.functions[0]);
      for (std::size_t r = 0; r < fl.aligned.size(); ++r) {
        put("ipsvd", "lg_1_" + std::to_string(r + 1), fl.aligned[r]);
        put("ipsvd", "lg_lin_1_" + std::to_string(r + 1), fl.best_linear[r]);
      }
    }
    if (group.rank_check) {
      const RankEstimate est = estimate_ranks(inst.y, designs);
      put("ipsvd", "rank_correct", est.ranks == ranks ? 1.0 : 0.0);
    }
  }
  if (v.hooi) {
    const HooiFit fit = hooi(inst.y, ranks, opts);
    for (std::size_t m = 0; m < group.loss_modes; ++m) {
      put("hooi", "l2_A" + std::to_string(m + 1), loss_subspace(fit.loadings[m], inst.a[m]));
    }
    put("hooi", "remse", loss_remse(fit.signal(), inst.signal));
    put("hooi", "remse_obs", loss_remse(fit.signal(), inst.y));
    put("hooi", "iterations", static_cast<double>(fit.iterations_used));
  }
}

}  // namespace

std::vector<std::string> protocol_names() {
  return {"table1",           "table3_J_sweep", "table4_gamma_sweep", "table6_multiplicative",
          "suppC_unbalanced", "noise_amplify",  "prediction_holdout"};
}

double protocol_kappa(const std::string& protocol) {
  build_groups(protocol, 0.5);
  return protocol == "table3_J_sweep" ? 0.8 : 0.5;
}

std::vector<std::string> protocol_cells(const std::string& protocol) {
  std::vector<std::string> out;
  for (const Group& g : build_groups(protocol, 0.5)) {
    for (const Variant& v : g.variants) out.push_back(v.cell);
  }
  return out;
}

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("invalid protocol JSON: ") + e.what());
  }
  if (!j.is_object()) throw ArgumentError("protocol JSON must be an object");
  ExperimentSpec s;
  try {
    s.protocol = j.value("protocol", s.protocol);
    s.reps = j.value("reps", s.reps);
    s.seed = j.value("seed", s.seed);
    s.threads = j.value("threads", s.threads);
    s.cells = j.value("cells", s.cells);
    if (j.contains("kappa")) s.kappa = j.at("kappa").get<double>();
    s.iteration.max_iter = j.value("max_iter", s.iteration.max_iter);
    s.iteration.tol = j.value("tol", s.iteration.tol);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("invalid protocol JSON: ") + e.what());
  }
  return s;
}

double ExperimentResult::mean(const std::string& cell, const std::string& method,
                              const std::string& metric) const {
  for (const SummaryRow& r : summary) {
    if (r.cell == cell && r.method == method && r.metric == metric) return r.mean;
  }
  throw ArgumentError("no result for " + cell + "/" + method + "/" + metric);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.reps == 0) throw ArgumentError("reps must be at least 1");
  const double kappa = spec.kappa.value_or(protocol_kappa(spec.protocol));
  const std::vector<Group> groups = build_groups(spec.protocol, kappa);
  for (const std::string& c : spec.cells) {
    bool found = false;
    for (const Group& g : groups) {
      for (const Variant& v : g.variants) found = found || v.cell == c;
    }
    if (!found) throw ArgumentError("protocol " + spec.protocol + " has no cell '" + c + "'");
  }
  auto wanted = [&](const Variant& v) {
    return spec.cells.empty() ||
           std::find(spec.cells.begin(), spec.cells.end(), v.cell) != spec.cells.end();
  };

  struct Task {
    std::size_t group;
    std::size_t rep;
    std::uint64_t seed;
  };
  ExperimentResult result;
  result.spec = spec;
  result.kappa = kappa;
  std::vector<Task> tasks;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const bool any = std::any_of(groups[gi].variants.begin(), groups[gi].variants.end(), wanted);
    if (!any) continue;
    const std::uint64_t group_seed = derive_seed(spec.seed, gi);
    std::vector<std::uint64_t> seeds;
    for (std::size_t r = 0; r < spec.reps; ++r) {
      seeds.push_back(derive_seed(group_seed, r));
      tasks.push_back(Task{gi, r, seeds.back()});
    }
    result.seeds.emplace_back(groups[gi].name, std::move(seeds));
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::vector<Record>> records(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      const Group& g = groups[task.group];
      try {
        SimConfig cfg = g.config;
        cfg.seed = task.seed;
        const SimInstance inst = generate(cfg);
        for (const Variant& v : g.variants) {
          if (wanted(v)) run_variant(g, v, inst, spec.iteration, task.seed, records[t]);
        }
      } catch (const std::exception& e) {
        errors[t] = g.name + " rep " + std::to_string(task.rep) + ": " + e.what();
      }
    }
  };
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(spec.threads, tasks.size()));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw NumericError("replication failed: " + e);
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // Output order: cell order of the protocol, then first appearance of
  // (method, metric) within the cell, then replication index.
  std::vector<std::string> cell_order;
  for (const Group& g : groups) {
    for (const Variant& v : g.variants) {
      if (wanted(v)) cell_order.push_back(v.cell);
    }
  }
  for (const std::string& cell : cell_order) {
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::size_t, double>>> vals;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      for (const auto& [c, method, metric, value] : records[t]) {
        if (c != cell) continue;
        const auto key = std::make_pair(method, metric);
        if (!vals.count(key)) keys.push_back(key);
        vals[key].emplace_back(tasks[t].rep, value);
      }
    }
    for (const auto& key : keys) {
      auto& list = vals[key];
      std::sort(list.begin(), list.end());
      SummaryRow row{cell, key.first, key.second, 0.0, 0.0, list.size()};
      double sum = 0.0;
      for (const auto& [rep, value] : list) {
        sum += value;
        result.values.push_back(ReplicationValue{cell, key.first, key.second, rep, value});
      }
      row.mean = sum / static_cast<double>(list.size());
      double ss = 0.0;
      for (const auto& p : list) ss += (p.second - row.mean) * (p.second - row.mean);
      row.sd = list.size() > 1 ? std::sqrt(ss / static_cast<double>(list.size() - 1)) : 0.0;
      result.summary.push_back(row);
    }
  }
  return result;
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
  out << "cell,method,metric,mean,sd,reps\n";
  for (const SummaryRow& r : result.summary) {
    out << '"' << r.cell << "\"," << r.method << ',' << r.metric << ',' << format_double(r.mean)
        << ',' << format_double(r.sd) << ',' << r.reps << '\n';
  }
}

void write_values_csv(std::ostream& out, const ExperimentResult& result) {
  out << "cell,method,metric,rep,value\n";
  for (const ReplicationValue& v : result.values) {
    out << '"' << v.cell << "\"," << v.method << ',' << v.metric << ',' << v.rep << ','
        << format_double(v.value) << '\n';
  }
}

std::string manifest_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["command"] = "simulate";
  j["version"] = std::string(kVersion);
  j["protocol"] = result.spec.protocol;
  j["reps"] = result.spec.reps;
  j["seed"] = result.spec.seed;
  j["threads"] = result.spec.threads;
  j["kappa"] = result.kappa;
  j["cells"] = result.spec.cells;
  j["max_iter"] = result.spec.iteration.max_iter;
  j["tol"] = result.spec.iteration.tol;
  j["seed_scheme"] = "splitmix64(splitmix64(seed, group), replication)";
  nlohmann::json seeds = nlohmann::json::object();
  for (const auto& [name, list] : result.seeds) seeds[name] = list;
  j["replication_seeds"] = seeds;
  j["seconds"] = result.seconds;
  return j.dump(2);
}

HoldoutErrors prediction_holdout(const SimInstance& inst, std::size_t degree,
                                 double train_fraction, std::uint64_t split_seed,
                                 const IterationOptions& opts) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("train fraction must lie in (0, 1)");
  }
  const std::size_t n = inst.config.dims[0];
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw ArgumentError("holdout split leaves an empty side");

  // Fisher-Yates with the split seed; the first n_train indices train.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(split_seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<long>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<long>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  auto rows_of = [&](const DenseTensor& t, const std::vector<std::size_t>& idx) {
    Extents d = t.dims();
    d[0] = idx.size();
    DenseTensor out(d);
    const std::size_t slice = t.trailing(0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy_n(t.data() + idx[i] * slice, slice, out.data() + i * slice);
    }
    return out;
  };
  auto matrix_rows = [](const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
    return out;
  };

  const DenseTensor y_train = rows_of(inst.y, train);
  const DenseTensor s_test = rows_of(inst.signal, test);
  const DenseTensor y_test = rows_of(inst.y, test);
  const Matrix x_train = matrix_rows(inst.x[0], train);
  const Matrix x_test = matrix_rows(inst.x[0], test);

  BasisSpec spec;
  spec.degree = degree;
  Designs designs;
  designs.emplace_back(build_design(x_train, spec));
  for (std::size_t m = 1; m < inst.x.size(); ++m) designs.emplace_back(build_design(inst.x[m], spec));
  const TuckerRanks ranks{Extents(inst.config.dims.size(), inst.config.rank)};

  FitOptions fo;
  fo.iteration = opts;
  const StefaFit fit = fit_stefa(y_train, designs, ranks, fo);
  const HooiFit base = hooi(y_train, ranks, opts);
  const KernelSpec kernel;
  const DenseTensor p_stefa = predict_stefa(fit, designs, x_test, kernel).values;
  const DenseTensor p_vanilla = predict_vanilla(base, x_train, x_test, kernel).values;

  HoldoutErrors e;
  e.stefa = loss_remse(p_stefa, s_test);
  e.vanilla = loss_remse(p_vanilla, s_test);
  e.stefa_observed = loss_remse(p_stefa, y_test);
  e.vanilla_observed = loss_remse(p_vanilla, y_test);
  return e;
}

}  // namespace stefa
