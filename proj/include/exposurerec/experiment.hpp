// Copyright 2026 The exposurerec Authors.
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


// End-to-end experiment runs: data, simulator, baseline and augmented
// recommenders, evaluation and report files.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "exposurerec/config.hpp"
#include "exposurerec/metrics.hpp"
#include "exposurerec/report.hpp"
#include "exposurerec/synthetic.hpp"
#include "exposurerec/training.hpp"

namespace exposurerec {

struct RunRecord {
  std::uint64_t seed = 0;
  std::size_t split = 0;
  Strategy strategy = Strategy::kNone;
  double delta = 0.0;
  std::size_t train_sequences = 0;
  MetricsReport logged;
  std::optional<MetricsReport> oracle;
  TrainingReport training;
};

struct SimulatorRecord {
  std::uint64_t seed = 0;
  std::size_t split = 0;
  TrainingReport training;
  std::optional<SimulatorQuality> quality;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<SimulatorRecord> simulators;

  std::vector<ReportEntry> entries() const;
};

// Seeds derived for one (seed, split) cell of an experiment.
std::uint64_t derived_seed(std::uint64_t seed, std::size_t split, std::uint64_t stream);

// Runs every (seed, split) cell. The baseline recommender of a cell is shared:
// each augmentation strategy and delta starts from a copy of it.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes config.ini, runs.tsv, summary.tsv, simulator.tsv, one sweep file
// per augmentation strategy and per-run metrics and training reports.
void write_experiment(const ExperimentResult& result, const ExperimentConfig& config,
                      const std::string& dir);

}  // namespace exposurerec
