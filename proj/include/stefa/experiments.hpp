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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stefa/simlab.hpp"

namespace stefa {

/// Named protocols: table1, table3_J_sweep, table4_gamma_sweep,
/// table6_multiplicative, suppC_unbalanced, noise_amplify, prediction_holdout.
struct ExperimentSpec {
  std::string protocol = "table1";
  std::size_t reps = 20;
  std::uint64_t seed = 20210101;
  std::size_t threads = 1;
  /// Restrict to these cell labels (empty runs every cell). Seeds do not
  /// depend on the filter.
  std::vector<std::string> cells;
  /// Generator decay coefficient; empty uses the protocol default.
  std::optional<double> kappa;
  IterationOptions iteration;
};

/// Parses {"protocol", "reps", "seed", "threads", "cells", "kappa",
/// "max_iter", "tol"}; absent keys keep their defaults.
ExperimentSpec parse_experiment_spec(const std::string& json_text);

std::vector<std::string> protocol_names();

/// Cell labels of a protocol, in output order.
std::vector<std::string> protocol_cells(const std::string& protocol);

/// Default kappa of a protocol.
double protocol_kappa(const std::string& protocol);

struct SummaryRow {
  std::string cell;
  std::string method;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
  std::size_t reps = 0;
};

struct ReplicationValue {
  std::string cell;
  std::string method;
  std::string metric;
  std::size_t rep = 0;
  double value = 0.0;
};

struct ExperimentResult {
  ExperimentSpec spec;
  double kappa = 0.0;
  std::vector<SummaryRow> summary;
  std::vector<ReplicationValue> values;  // ordered by cell, method, metric, rep
  std::vector<std::pair<std::string, std::vector<std::uint64_t>>> seeds;  // per group
  double seconds = 0.0;

  /// Mean of one summary row; throws when absent.
  double mean(const std::string& cell, const std::string& method, const std::string& metric) const;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

/// cell,method,metric,mean,sd,reps
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
/// cell,method,metric,rep,value
void write_values_csv(std::ostream& out, const ExperimentResult& result);
/// Protocol, seeds, kappa, timing and version as JSON.
std::string manifest_json(const ExperimentResult& result);

struct HoldoutErrors {
  double stefa = 0.0;    // ||Y_hat - S_test|| / ||S_test||
  double vanilla = 0.0;
  double stefa_observed = 0.0;  // same against the held-out observations
  double vanilla_observed = 0.0;
};

/// Holds out round(I_1 * (1 - train_fraction)) mode-1 rows of `inst`, fits
/// both estimators on the rest and predicts the held-out rows.
HoldoutErrors prediction_holdout(const SimInstance& inst, std::size_t degree,
                                 double train_fraction, std::uint64_t split_seed,
                                 const IterationOptions& opts = {});

}  // namespace stefa
