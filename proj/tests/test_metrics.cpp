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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "exposurerec/errors.hpp"
#include "exposurerec/metrics.hpp"
#include "test_support.hpp"

namespace {

namespace er = exposurerec;
using er::ItemId;

const std::vector<ItemId> kRanked{4, 9, 2, 7, 1, 3, 8, 6, 5};

TEST(RecallAtK, Boundaries) {
  EXPECT_EQ(er::recall_at_k(kRanked, 4, 5), 1.0);
  EXPECT_EQ(er::recall_at_k(kRanked, 3, 5), 0.0);
  EXPECT_EQ(er::recall_at_k(kRanked, 1, 5), 1.0);
  EXPECT_THROW(er::recall_at_k(kRanked, 1, 0), er::ConfigError);
}

TEST(NdcgAtK, HandValues) {
  EXPECT_EQ(er::ndcg_at_k(kRanked, 4, 5), 1.0);
  EXPECT_DOUBLE_EQ(er::ndcg_at_k(kRanked, 2, 5), 0.5);
  EXPECT_EQ(er::ndcg_at_k(kRanked, 8, 5), 0.0);
  EXPECT_THROW(er::ndcg_at_k(kRanked, 1, 0), er::ConfigError);
}

TEST(NdcgAtK, NeverExceedsRecall) {
  er::Rng rng(1);
  std::vector<ItemId> perm(30);
  std::iota(perm.begin(), perm.end(), 1u);
  for (int i = 0; i < 2000; ++i) {
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    const auto truth = static_cast<ItemId>(rng.uniform_int(1, 30));
    const std::size_t k = 1 + rng.uniform_int(0, 29);
    const double r = er::recall_at_k(perm, truth, k), n = er::ndcg_at_k(perm, truth, k);
    ASSERT_LE(r, 1.0);
    ASSERT_LE(n, r);
    ASSERT_GE(n, 0.0);
  }
}

TEST(CoverageAtK, HandValues) {
  const std::vector<ItemId> lists[] = {{1, 2}, {2, 3}};
  EXPECT_DOUBLE_EQ(er::coverage_at_k(lists, 2, 10), 0.3);
  const std::vector<ItemId> same[] = {{5, 6, 7}, {5, 6, 7}, {5, 6, 7}};
  EXPECT_DOUBLE_EQ(er::coverage_at_k(same, 3, 20), 3.0 / 20.0);
  std::vector<ItemId> full(8);
  std::iota(full.begin(), full.end(), 1u);
  const std::vector<ItemId> one[] = {full};
  EXPECT_DOUBLE_EQ(er::coverage_at_k(one, 8, 8), 1.0);
}

TEST(CoverageAtK, MonotoneInK) {
  er::Rng rng(2);
  std::vector<std::vector<ItemId>> lists;
  std::vector<ItemId> perm(40);
  std::iota(perm.begin(), perm.end(), 1u);
  for (int u = 0; u < 15; ++u) {
    std::shuffle(perm.begin(), perm.begin() + 20, rng.engine());
    lists.emplace_back(perm.begin(), perm.begin() + 20);
  }
  double prev = 0.0;
  for (std::size_t k = 1; k <= 20; ++k) {
    const double c = er::coverage_at_k(lists, k, 40);
    EXPECT_GE(c, prev);
    EXPECT_LE(c, 1.0);
    prev = c;
  }
}

TEST(ValidateKs, PositiveAndIncreasing) {
  const std::size_t good[] = {5, 10, 20};
  EXPECT_NO_THROW(er::validate_ks(good));
  const std::size_t zero[] = {0, 5};
  const std::size_t unsorted[] = {10, 5};
  EXPECT_THROW(er::validate_ks(zero), er::ConfigError);
  EXPECT_THROW(er::validate_ks(unsorted), er::ConfigError);
  EXPECT_THROW(er::validate_ks({}), er::ConfigError);
}

// ---------------------------------------------------------------- evaluate

er::Dataset test_set(std::size_t users, std::size_t catalog, er::Rng& rng) {
  er::Dataset ds;
  ds.num_items = catalog;
  for (std::size_t u = 0; u < users; ++u) {
    ds.sequences.push_back(exrec_test::random_sequence(u, 8, catalog, rng, 0.6));
  }
  return ds;
}

TEST(Evaluate, PerfectModelScoresOne) {
  er::Rng rng(3);
  auto ds = test_set(30, 12, rng);
  for (auto& s : ds.sequences) s.events.push_back({1, 1, {}});
  er::RecommenderModel model(exrec_test::tiny_recommender_config(12), rng);
  model.head.bias.value[0] = 1e3;
  const std::size_t ks[] = {1, 5, 10};
  auto r = er::evaluate(model, ds, ks);
  for (auto k : ks) {
    EXPECT_EQ(r.recall.at(k), 1.0);
    EXPECT_EQ(r.ndcg.at(k), 1.0);
  }
}

TEST(Evaluate, RandomModelRecallNearKOverV) {
  const std::size_t ks[] = {5, 10};
  double sum5 = 0.0, sum10 = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    er::Rng rng(seed);
    auto ds = test_set(400, 50, rng);
    er::RecommenderModel model(exrec_test::tiny_recommender_config(50), rng);
    auto r = er::evaluate(model, ds, ks);
    sum5 += r.recall.at(5);
    sum10 += r.recall.at(10);
  }
  EXPECT_NEAR(sum5 / 5, 5.0 / 50.0, 0.03);
  EXPECT_NEAR(sum10 / 5, 10.0 / 50.0, 0.03);
}

TEST(Evaluate, CountsExclusionsAndIsDeterministic) {
  er::Rng rng(4);
  auto ds = test_set(20, 12, rng);
  ds.sequences[3].events = {{2, 1, {}}, {3, 0, {}}};
  er::RecommenderModel model(exrec_test::tiny_recommender_config(12), rng);
  const std::size_t ks[] = {5, 10};
  auto a = er::evaluate(model, ds, ks);
  EXPECT_EQ(a, er::evaluate(model, ds, ks));
  EXPECT_EQ(a.excluded, 1u);
  EXPECT_EQ(a.sequences, 19u);
  EXPECT_GE(a.coverage.at(10), a.coverage.at(5));
  for (auto k : ks) {
    EXPECT_GE(a.recall.at(k), 0.0);
    EXPECT_LE(a.recall.at(k), 1.0);
    EXPECT_LE(a.ndcg.at(k), a.recall.at(k));
  }
}

TEST(Evaluate, NoEligibleSequenceIsEmptyReportError) {
  er::Rng rng(5);
  er::Dataset ds;
  ds.num_items = 12;
  ds.sequences.push_back({0, {{1, 1, {}}, {2, 0, {}}}});
  er::RecommenderModel model(exrec_test::tiny_recommender_config(12), rng);
  const std::size_t ks[] = {5};
  EXPECT_THROW(er::evaluate(model, ds, ks), er::EmptyReportError);
}

// ---------------------------------------------------------------- rank statistics

TEST(RocAuc, HandValuesAndTies) {
  const double s[] = {0.1, 0.4, 0.35, 0.8};
  const int y[] = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(er::roc_auc(s, y), 0.75);
  const double tied[] = {0.5, 0.5, 0.5};
  const int y2[] = {1, 0, 1};
  EXPECT_DOUBLE_EQ(er::roc_auc(tied, y2), 0.5);
  const int one_class[] = {1, 1, 1};
  EXPECT_THROW(er::roc_auc(tied, one_class), er::DomainError);
}

TEST(RocAuc, MatchesPairwiseOracle) {
  er::Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(60);
    std::vector<int> y(60);
    for (int i = 0; i < 60; ++i) {
      s[i] = std::round(rng.normal() * 4) / 4;
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    double wins = 0, pairs = 0;
    for (int i = 0; i < 60; ++i) {
      for (int j = 0; j < 60; ++j) {
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
      }
    }
    ASSERT_NEAR(er::roc_auc(s, y), wins / pairs, 1e-12);
  }
}

TEST(SpearmanRho, ExtremesAndTies) {
  const double x[] = {1, 2, 3, 4, 5};
  const double up[] = {2, 4, 8, 16, 32};
  const double down[] = {5, 4, 3, 2, 1};
  EXPECT_NEAR(er::spearman_rho(x, up), 1.0, 1e-15);
  EXPECT_NEAR(er::spearman_rho(x, down), -1.0, 1e-15);
  // Ranks of `tied` are (1.5, 1.5, 3, 4, 5).
  const double tied[] = {1, 1, 3, 4, 5};
  const double rx[] = {1, 2, 3, 4, 5}, ry[] = {1.5, 1.5, 3, 4, 5};
  double mx = 3, my = 3, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 5; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  EXPECT_NEAR(er::spearman_rho(x, tied), sxy / std::sqrt(sxx * syy), 1e-15);
}

// ---------------------------------------------------------------- report files

TEST(MetricsText, RoundTrip) {
  er::MetricsReport r;
  r.ks = {5, 10};
  r.recall = {{5, 0.1}, {10, 1.0 / 3.0}};
  r.ndcg = {{5, 0.05}, {10, 0.123456789012345678}};
  r.coverage = {{5, 0.2}, {10, 0.4}};
  r.sequences = 40;
  r.excluded = 2;
  r.seed = 99;
  r.fingerprint = "abcdef0123456789";
  r.kind = "oracle";
  const std::string text = er::serialize_metrics(r);
  EXPECT_EQ(er::parse_metrics(text), r);
  EXPECT_NE(text.find("ndcg\t10\t"), std::string::npos);
  auto path = std::filesystem::temp_directory_path() / "exrec_metrics_roundtrip.tsv";
  er::save_metrics(r, path.string());
  EXPECT_EQ(er::load_metrics(path.string()), r);
  std::filesystem::remove(path);
  EXPECT_THROW(er::parse_metrics("recall\t5\n"), er::ParseError);
  EXPECT_THROW(er::load_metrics("/nonexistent/metrics.tsv"), er::IoError);
}

}  // namespace
