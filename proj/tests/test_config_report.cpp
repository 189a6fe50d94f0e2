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
#include <string>
#include <vector>

#include "exposurerec/config.hpp"
#include "exposurerec/errors.hpp"
#include "exposurerec/report.hpp"

namespace {

namespace er = exposurerec;

std::size_t parse_error_line(const std::string& text) {
  try {
    er::KeyValueConfig::parse(text);
  } catch (const er::ParseError& e) {
    return e.line();
  }
  return 0;
}

TEST(KeyValueConfig, ParsesSectionsCommentsAndWhitespace) {
  auto kv = er::KeyValueConfig::parse(
      "# comment\n[a]\n  x = 1 \n; other\ny=hello world\n\n[b]\nflag = yes\n");
  EXPECT_EQ(kv.get_string("a", "x", ""), "1");
  EXPECT_EQ(kv.get_string("a", "y", ""), "hello world");
  EXPECT_TRUE(kv.get_bool("b", "flag", false));
  EXPECT_FALSE(kv.has("b", "x"));
  EXPECT_EQ(kv.get_uint("a", "x", 7), 1u);
  EXPECT_EQ(kv.get_uint("a", "missing", 7), 7u);
  EXPECT_DOUBLE_EQ(kv.get_double("c", "z", 2.5), 2.5);
}

TEST(KeyValueConfig, ParseErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("[a]\nx = 1\nnot a pair\n"), 3u);
  EXPECT_EQ(parse_error_line("x = 1\n"), 1u);
  EXPECT_EQ(parse_error_line("[a]\nx = 1\nx = 2\n"), 3u);
  EXPECT_EQ(parse_error_line("[a\n"), 1u);
  EXPECT_EQ(parse_error_line("[a]\n = 3\n"), 2u);
}

TEST(KeyValueConfig, TypedGetterErrors) {
  auto kv = er::KeyValueConfig::parse("[a]\nn = -3\nf = 1.5x\nb = maybe\nu = 2.0\n");
  EXPECT_THROW(kv.get_uint("a", "n", 0), er::ConfigError);
  EXPECT_THROW(kv.get_uint("a", "u", 0), er::ConfigError);
  EXPECT_THROW(kv.get_double("a", "f", 0), er::ConfigError);
  EXPECT_THROW(kv.get_bool("a", "b", false), er::ConfigError);
  EXPECT_DOUBLE_EQ(kv.get_double("a", "n", 0), -3.0);
}

TEST(KeyValueConfig, SerializeIsSortedAndReparses) {
  er::KeyValueConfig kv;
  kv.set("z", "b", "2");
  kv.set("z", "a", "1");
  kv.set("m", "k", "v");
  EXPECT_EQ(kv.serialize(), "[m]\nk = v\n\n[z]\na = 1\nb = 2\n");
  EXPECT_EQ(er::KeyValueConfig::parse(kv.serialize()).sections(), kv.sections());
}

TEST(SplitList, TrimsAndDropsEmpty) {
  EXPECT_EQ(er::split_list(" a, b ,,c "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(er::split_list("").empty());
}

TEST(ExperimentConfig, DefaultsRoundTripThroughText) {
  er::ExperimentConfig c;
  auto back = er::ExperimentConfig::parse(c.serialize());
  EXPECT_EQ(back.serialize(), c.serialize());
  EXPECT_EQ(back.fingerprint(), c.fingerprint());
  EXPECT_EQ(c.fingerprint().size(), 16u);
}

TEST(ExperimentConfig, ParsesEveryOverride) {
  auto c = er::ExperimentConfig::parse(
      "[synthetic]\nusers = 40\nitems = 30\nfactors = 4\nsteps = 12\npolicy = uniform\n"
      "slope = 1.5\n[recommender]\nd = 16\nheads = 2\ngamma = 0.5\n"
      "[augmentation]\nstrategies = none, random\ndeltas = 0.2, 5\nsigma = 0.1\n"
      "union = false\nsampling = greedy\nfeedback = threshold\n"
      "[evaluation]\nks = 1, 3\n[run]\nseeds = 4,5,6\n[data]\nsplit = 0.6, 0.2, 0.2\n");
  EXPECT_EQ(c.synthetic.users, 40u);
  EXPECT_EQ(c.synthetic.policy.kind, er::PolicyKind::kUniform);
  EXPECT_DOUBLE_EQ(c.synthetic.world.slope, 1.5);
  EXPECT_EQ(c.recommender.d, 16u);
  EXPECT_DOUBLE_EQ(c.recommender.reward.gamma, 0.5);
  EXPECT_EQ(c.strategies, (std::vector<er::Strategy>{er::Strategy::kNone, er::Strategy::kRandom}));
  EXPECT_EQ(c.deltas, (std::vector<double>{0.2, 5.0}));
  EXPECT_DOUBLE_EQ(c.augmentation.sigma, 0.1);
  EXPECT_FALSE(c.augmentation.include_original);
  EXPECT_EQ(c.augmentation.sampling.mode, er::SamplingMode::kGreedy);
  EXPECT_EQ(c.augmentation.feedback, er::FeedbackMode::kThreshold);
  EXPECT_EQ(c.ks, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
  EXPECT_DOUBLE_EQ(c.split_ratios[0], 0.6);
  EXPECT_NO_THROW(c.validate());
  auto back = er::ExperimentConfig::parse(c.serialize());
  EXPECT_EQ(back.fingerprint(), c.fingerprint());
}

TEST(ExperimentConfig, FingerprintTracksContent) {
  er::ExperimentConfig a, b;
  b.seeds = {2};
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  b.seeds = a.seeds;
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.output_dir = "/somewhere/else";
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
}

TEST(ExperimentConfig, ValidationErrors) {
  auto bad = [](const std::string& text) {
    return er::ExperimentConfig::parse(text);
  };
  EXPECT_THROW(bad("[augmentation]\nstrategies = best\n"), er::ConfigError);
  EXPECT_THROW(bad("[synthetic]\npolicy = greedy\n"), er::ConfigError);
  EXPECT_THROW(bad("[data]\nsplit = 0.5, 0.5\n"), er::ConfigError);
  EXPECT_THROW(bad("[augmentation]\nsampling = beam\n"), er::ConfigError);
  EXPECT_THROW(bad("[augmentation]\nfeedback = coin\n"), er::ConfigError);
  EXPECT_THROW(bad("[augmentation]\ndeltas = 0\n").validate(), er::ConfigError);
  EXPECT_THROW(bad("[run]\nseeds =\n").validate(), er::ConfigError);
  EXPECT_THROW(bad("[evaluation]\nks = 0\n").validate(), er::ConfigError);
  EXPECT_THROW(bad("[synthetic]\nsteps = 1\n").validate(), er::ConfigError);
  EXPECT_THROW(bad("[data]\nlog = /nonexistent/exrec.log\n").validate(), er::IoError);
  EXPECT_THROW(er::ExperimentConfig::load("/nonexistent/exrec.cfg"), er::IoError);
}

er::MetricsReport metrics(double recall10, double ndcg10, double cov10,
                          const std::string& kind = "logged") {
  er::MetricsReport r;
  r.ks = {10};
  r.recall[10] = recall10;
  r.ndcg[10] = ndcg10;
  r.coverage[10] = cov10;
  r.kind = kind;
  return r;
}

TEST(Report, SampleStddev) {
  EXPECT_EQ(er::sample_stddev(std::vector<double>{}), 0.0);
  EXPECT_EQ(er::sample_stddev(std::vector<double>{3.0}), 0.0);
  EXPECT_DOUBLE_EQ(er::sample_stddev(std::vector<double>{1.0, 2.0, 3.0, 4.0}),
                   std::sqrt(5.0 / 3.0));
}

TEST(Report, SummarizeGroupsByLabelDeltaKind) {
  std::vector<er::ReportEntry> e{{"none", 1.0, metrics(0.2, 0.1, 0.3)},
                                 {"none", 1.0, metrics(0.4, 0.3, 0.5)},
                                 {"random", 1.0, metrics(0.5, 0.25, 0.6)},
                                 {"none", 1.0, metrics(0.9, 0.8, 0.7, "oracle")}};
  auto rows = er::summarize(e);
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0].label, "none");
  EXPECT_EQ(rows[0].metric, "recall");
  EXPECT_DOUBLE_EQ(rows[0].mean, 0.3);
  EXPECT_DOUBLE_EQ(rows[0].stddev, std::sqrt(0.02));
  EXPECT_EQ(rows[0].runs, 2u);
  EXPECT_EQ(rows[1].metric, "ndcg");
  EXPECT_DOUBLE_EQ(rows[1].mean, 0.2);
  EXPECT_EQ(rows[3].label, "random");
  EXPECT_EQ(rows[3].stddev, 0.0);
  EXPECT_EQ(rows[6].kind, "oracle");

  const std::string table = er::summary_table(e);
  EXPECT_EQ(table.substr(0, table.find('\n')), "label\tdelta\tkind\tmetric\tK\tmean\tstddev\truns");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 10);
}

TEST(Report, SummarizeRejectsMismatchedCutoffs) {
  auto a = metrics(0.1, 0.1, 0.1);
  auto b = a;
  b.ks = {5};
  b.recall = {{5, 0.1}};
  std::vector<er::ReportEntry> e{{"x", 1.0, b}, {"x", 1.0, a}};
  EXPECT_THROW(er::summarize(e), er::ConfigError);
}

TEST(Report, DeltaSweepTableSortsDeltas) {
  std::vector<er::ReportEntry> e{{"random", 5.0, metrics(0.5, 0.3, 0.4)},
                                 {"random", 0.2, metrics(0.1, 0.05, 0.2)},
                                 {"random", 1.0, metrics(0.3, 0.2, 0.3)},
                                 {"none", 1.0, metrics(0.9, 0.9, 0.9)}};
  const std::string t = er::delta_sweep_table(e, "random", 10);
  EXPECT_EQ(t,
            "# label=random K=10\n"
            "delta\tmetric\tmean\tstddev\n"
            "0.20000000000000001\tcoverage@10\t0.20000000000000001\t0\n"
            "1\tcoverage@10\t0.29999999999999999\t0\n"
            "5\tcoverage@10\t0.40000000000000002\t0\n"
            "0.20000000000000001\tndcg@10\t0.050000000000000003\t0\n"
            "1\tndcg@10\t0.20000000000000001\t0\n"
            "5\tndcg@10\t0.29999999999999999\t0\n"
            "0.20000000000000001\trecall@10\t0.10000000000000001\t0\n"
            "1\trecall@10\t0.29999999999999999\t0\n"
            "5\trecall@10\t0.5\t0\n");
}

TEST(Report, RunsTableListsEverySeed) {
  auto a = metrics(0.1, 0.2, 0.3);
  a.seed = 7;
  std::vector<er::ReportEntry> e{{"none", 1.0, a}};
  const std::string t = er::runs_table(e);
  EXPECT_NE(t.find("none\t1\tlogged\t7\trecall\t10\t0.10000000000000001\n"), std::string::npos);
}

}  // namespace
