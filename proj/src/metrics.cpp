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

#include "exposurerec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "exposurerec/errors.hpp"

namespace exposurerec {
namespace {

std::size_t rank_of(std::span<const ItemId> ranked, ItemId truth, std::size_t k) {
  if (k < 1) throw ConfigError("metric cutoff K must be >= 1");
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked[i] == truth) return i + 1;
  }
  return 0;
}

constexpr std::size_t kEvalBatch = 64;

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double recall_at_k(std::span<const ItemId> ranked, ItemId truth, std::size_t k) {
  return rank_of(ranked, truth, k) ? 1.0 : 0.0;
}

double ndcg_at_k(std::span<const ItemId> ranked, ItemId truth, std::size_t k) {
  const std::size_t r = rank_of(ranked, truth, k);
  return r ? 1.0 / std::log2(static_cast<double>(r) + 1.0) : 0.0;
}

double coverage_at_k(std::span<const std::vector<ItemId>> lists, std::size_t k,
                     std::size_t catalog_size) {
  if (catalog_size < 1) throw ConfigError("coverage needs a non-empty catalog");
  std::unordered_set<ItemId> seen;
  for (const auto& l : lists) {
    const std::size_t n = std::min(k, l.size());
    seen.insert(l.begin(), l.begin() + static_cast<long>(n));
  }
  return static_cast<double>(seen.size()) / static_cast<double>(catalog_size);
}

void validate_ks(std::span<const std::size_t> ks) {
  if (ks.empty()) throw ConfigError("at least one cutoff K is required");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw ConfigError("cutoff K must be positive");
    if (i && ks[i] <= ks[i - 1]) throw ConfigError("cutoffs K must be strictly increasing");
  }
}

MetricsReport evaluate(const RecommenderModel& model, const Dataset& test,
                       std::span<const std::size_t> ks) {
  validate_ks(ks);
  MetricsReport report;
  report.ks.assign(ks.begin(), ks.end());
  const std::size_t kmax = ks.back();

  std::vector<std::vector<ItemId>> histories;
  std::vector<ItemId> truths;
  for (const auto& seq : test.sequences) {
    std::vector<ItemId> items = interaction_items(seq);
    if (items.size() < 2) {
      ++report.excluded;
      continue;
    }
    truths.push_back(items.back());
    items.pop_back();
    histories.push_back(std::move(items));
  }
  if (histories.empty()) {
    throw EmptyReportError("no test sequence has two or more interactions (" +
                           std::to_string(report.excluded) + " excluded)");
  }

  std::vector<std::vector<ItemId>> lists;
  lists.reserve(histories.size());
  for (std::size_t start = 0; start < histories.size(); start += kEvalBatch) {
    const std::size_t n = std::min(kEvalBatch, histories.size() - start);
    auto part = recommend_topk_batch(
        std::span<const std::vector<ItemId>>(histories.data() + start, n), kmax, model);
    for (auto& l : part) lists.push_back(std::move(l));
  }

  for (auto k : ks) {
    double rsum = 0.0, nsum = 0.0;
    for (std::size_t i = 0; i < lists.size(); ++i) {
      rsum += recall_at_k(lists[i], truths[i], k);
      nsum += ndcg_at_k(lists[i], truths[i], k);
    }
    report.recall[k] = rsum / static_cast<double>(lists.size());
    report.ndcg[k] = nsum / static_cast<double>(lists.size());
    report.coverage[k] = coverage_at_k(lists, k, model.num_items());
  }
  report.sequences = lists.size();
  return report;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("scores and labels differ in length");
  const auto ranks = average_ranks(scores);
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += ranks[i];
    } else if (labels[i] == 0) {
      neg += 1.0;
    } else {
      throw DomainError("AUC labels must be 0 or 1");
    }
  }
  if (pos == 0.0 || neg == 0.0) throw DomainError("AUC needs both positive and negative labels");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman inputs differ in length");
  if (x.size() < 2) throw DomainError("spearman needs at least two points");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("spearman undefined for a constant input");
  return sxy / std::sqrt(sxx * syy);
}

std::string serialize_metrics(const MetricsReport& r) {
  std::ostringstream out;
  out << "# exposurerec metrics v1\n";
  out << "# kind=" << r.kind << " sequences=" << r.sequences << " excluded=" << r.excluded
      << " seed=" << r.seed << " fingerprint=" << (r.fingerprint.empty() ? "-" : r.fingerprint)
      << "\n";
  out << "metric\tK\tvalue\n";
  for (auto k : r.ks) out << "recall\t" << k << '\t' << format_double(r.recall.at(k)) << '\n';
  for (auto k : r.ks) out << "ndcg\t" << k << '\t' << format_double(r.ndcg.at(k)) << '\n';
  for (auto k : r.ks) out << "coverage\t" << k << '\t' << format_double(r.coverage.at(k)) << '\n';
  return out.str();
}

MetricsReport parse_metrics(const std::string& text) {
  MetricsReport r;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream fields(line.substr(1));
      std::string kv;
      while (fields >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "kind") r.kind = val;
        if (key == "sequences") r.sequences = std::stoull(val);
        if (key == "excluded") r.excluded = std::stoull(val);
        if (key == "seed") r.seed = std::stoull(val);
        if (key == "fingerprint") r.fingerprint = val == "-" ? "" : val;
      }
      continue;
    }
    if (line.starts_with("metric\t")) continue;
    std::istringstream fields(line);
    std::string metric;
    std::size_t k = 0;
    std::string value;
    if (!(fields >> metric >> k >> value)) throw ParseError(line_no, "malformed metrics row");
    const double v = std::stod(value);
    if (metric == "recall") {
      r.recall[k] = v;
      if (std::find(r.ks.begin(), r.ks.end(), k) == r.ks.end()) r.ks.push_back(k);
    } else if (metric == "ndcg") {
      r.ndcg[k] = v;
    } else if (metric == "coverage") {
      r.coverage[k] = v;
    } else {
      throw ParseError(line_no, "unknown metric '" + metric + "'");
    }
  }
  std::sort(r.ks.begin(), r.ks.end());
  return r;
}

void save_metrics(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_metrics(report);
}

MetricsReport load_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_metrics(buf.str());
}

}  // namespace exposurerec
