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


// Aggregation of metrics reports into delimited tables.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "exposurerec/metrics.hpp"

namespace exposurerec {

struct ReportEntry {
  std::string label;  // e.g. the strategy name
  double delta = 0.0;
  MetricsReport metrics;
};

struct SummaryRow {
  std::string label;
  double delta = 0.0;
  std::string kind;
  std::string metric;
  std::size_t k = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
  std::size_t runs = 0;
};

double sample_stddev(std::span<const double> v);

// Groups entries by (label, delta, kind) in first-seen order and averages
// every (metric, K).
std::vector<SummaryRow> summarize(std::span<const ReportEntry> entries);

// label, delta, kind, metric, K, mean, stddev, runs.
std::string summary_table(std::span<const ReportEntry> entries);
// One row per entry and value: label, delta, kind, seed, metric, K, value.
std::string runs_table(std::span<const ReportEntry> entries);
// Plot data: delta, metric, mean, stddev for one label and K, deltas ascending.
std::string delta_sweep_table(std::span<const ReportEntry> entries, const std::string& label,
                              std::size_t k);

}  // namespace exposurerec
