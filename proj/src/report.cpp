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


#include "exposurerec/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "exposurerec/errors.hpp"

namespace exposurerec {
namespace {

const std::map<std::size_t, double>& metric_map(const MetricsReport& r, const std::string& m) {
  if (m == "recall") return r.recall;
  if (m == "ndcg") return r.ndcg;
  return r.coverage;
}

constexpr const char* kMetrics[] = {"recall", "ndcg", "coverage"};

}  // namespace

double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<SummaryRow> summarize(std::span<const ReportEntry> entries) {
  using Key = std::tuple<std::string, double, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const MetricsReport*>> groups;
  for (const auto& e : entries) {
    Key key{e.label, e.delta, e.metrics.kind};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&e.metrics);
  }
  std::vector<SummaryRow> rows;
  for (const auto& key : order) {
    const auto& group = groups[key];
    for (const char* m : kMetrics) {
      for (auto k : group.front()->ks) {
        std::vector<double> values;
        for (const MetricsReport* r : group) {
          const auto& mm = metric_map(*r, m);
          auto it = mm.find(k);
          if (it == mm.end()) {
            throw ConfigError("runs being aggregated disagree on the cutoff list");
          }
          values.push_back(it->second);
        }
        SummaryRow row;
        row.label = std::get<0>(key);
        row.delta = std::get<1>(key);
        row.kind = std::get<2>(key);
        row.metric = m;
        row.k = k;
        for (double v : values) row.mean += v;
        row.mean /= static_cast<double>(values.size());
        row.stddev = sample_stddev(values);
        row.runs = values.size();
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string summary_table(std::span<const ReportEntry> entries) {
  std::ostringstream out;
  out << "label\tdelta\tkind\tmetric\tK\tmean\tstddev\truns\n";
  for (const auto& r : summarize(entries)) {
    out << r.label << '\t' << format_double(r.delta) << '\t' << r.kind << '\t' << r.metric << '\t'
        << r.k << '\t' << format_double(r.mean) << '\t' << format_double(r.stddev) << '\t'
        << r.runs << '\n';
  }
  return out.str();
}

std::string runs_table(std::span<const ReportEntry> entries) {
  std::ostringstream out;
  out << "label\tdelta\tkind\tseed\tmetric\tK\tvalue\n";
  for (const auto& e : entries) {
    for (const char* m : kMetrics) {
      for (const auto& [k, v] : metric_map(e.metrics, m)) {
        out << e.label << '\t' << format_double(e.delta) << '\t' << e.metrics.kind << '\t'
            << e.metrics.seed << '\t' << m << '\t' << k << '\t' << format_double(v) << '\n';
      }
    }
  }
  return out.str();
}

std::string delta_sweep_table(std::span<const ReportEntry> entries, const std::string& label,
                              std::size_t k) {
  auto rows = summarize(entries);
  std::erase_if(rows, [&](const SummaryRow& r) { return r.label != label || r.k != k; });
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return std::tie(a.kind, a.metric, a.delta) < std::tie(b.kind, b.metric, b.delta);
  });
  std::ostringstream out;
  out << "# label=" << label << " K=" << k << "\n";
  out << "delta\tmetric\tmean\tstddev\n";
  for (const auto& r : rows) {
    const std::string name = (r.kind == "logged" ? "" : r.kind + "_") + r.metric + "@" +
                             std::to_string(r.k);
    out << format_double(r.delta) << '\t' << name << '\t' << format_double(r.mean) << '\t'
        << format_double(r.stddev) << '\n';
  }
  return out.str();
}

}  // namespace exposurerec
