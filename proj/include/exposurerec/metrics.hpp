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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "exposurerec/exposure_data.hpp"
#include "exposurerec/recommender.hpp"

namespace exposurerec {

// Single relevant item per query, so the ideal DCG is 1.
double recall_at_k(std::span<const ItemId> ranked, ItemId truth, std::size_t k);
double ndcg_at_k(std::span<const ItemId> ranked, ItemId truth, std::size_t k);

// |union of the first k items of every list| / catalog_size.
double coverage_at_k(std::span<const std::vector<ItemId>> lists, std::size_t k,
                     std::size_t catalog_size);

struct MetricsReport {
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> recall;
  std::map<std::size_t, double> ndcg;
  std::map<std::size_t, double> coverage;
  std::size_t sequences = 0;
  std::size_t excluded = 0;
  std::uint64_t seed = 0;
  std::string fingerprint;
  // "logged" for held-out interactions, "oracle" for ground-truth preferences.
  std::string kind = "logged";

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

void validate_ks(std::span<const std::size_t> ks);

// Last interacted item of each test sequence is the held-out truth; the
// interactions before it are the inference input. Sequences with fewer than
// two interactions are excluded and counted. Throws EmptyReportError when no
// sequence is eligible.
MetricsReport evaluate(const RecommenderModel& model, const Dataset& test,
                       std::span<const std::size_t> ks);

// Probability that a random positive outscores a random negative, ties
// counting one half. Throws DomainError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
// Pearson correlation of average ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Delimited text: '#' header lines, then "metric<TAB>K<TAB>value" rows.
std::string serialize_metrics(const MetricsReport& report);
MetricsReport parse_metrics(const std::string& text);
void save_metrics(const MetricsReport& report, const std::string& path);
MetricsReport load_metrics(const std::string& path);

// Formats doubles with round-trip precision.
std::string format_double(double v);

}  // namespace exposurerec
