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

#include <cmath>
#include <string>
#include <vector>

#include "exposurerec/errors.hpp"
#include "exposurerec/exposure_data.hpp"
#include "test_support.hpp"

namespace {

namespace er = exposurerec;
using er::ExposureSequence;
using er::ItemId;

ExposureSequence make_seq(std::vector<ItemId> items, std::vector<int> behaviors) {
  ExposureSequence s;
  for (std::size_t i = 0; i < items.size(); ++i) s.events.push_back({items[i], behaviors[i], {}});
  return s;
}

// ---------------------------------------------------------------- parsing

TEST(ParseExposureLog, TwoEventRecord) {
  auto ds = er::parse_exposure_log("#items 10\n4 7:1 3:0\n");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.num_items, 10u);
  EXPECT_EQ(ds.sequences[0].user, 4u);
  ASSERT_EQ(ds.sequences[0].size(), 2u);
  EXPECT_EQ(ds.sequences[0].events[0].item, 7u);
  EXPECT_EQ(ds.sequences[0].events[0].behavior, 1);
  EXPECT_EQ(ds.sequences[0].events[1].item, 3u);
  EXPECT_EQ(ds.sequences[0].events[1].behavior, 0);
}

TEST(ParseExposureLog, KeepsFinal200Events) {
  std::string text = "#items 300\n1";
  for (int i = 1; i <= 205; ++i) text += " " + std::to_string(i) + ":" + std::to_string(i % 2);
  auto ds = er::parse_exposure_log(text + "\n");
  ASSERT_EQ(ds.sequences[0].size(), 200u);
  EXPECT_EQ(ds.sequences[0].events.front().item, 6u);
  EXPECT_EQ(ds.sequences[0].events.back().item, 205u);
}

TEST(ParseExposureLog, BehaviorTwoIsParseErrorWithLine) {
  try {
    er::parse_exposure_log("#items 10\n1 2:1\n2 3:2\n");
    FAIL() << "expected ParseError";
  } catch (const er::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseExposureLog, UnknownItemIsCatalogError) {
  EXPECT_THROW(er::parse_exposure_log("#items 5\n1 6:1\n"), er::CatalogError);
  EXPECT_THROW(er::parse_exposure_log("#items 5\n1 0:1\n"), er::CatalogError);
}

TEST(ParseExposureLog, MalformedLinesAreParseErrors) {
  EXPECT_THROW(er::parse_exposure_log("1 2:1\n"), er::ParseError);
  EXPECT_THROW(er::parse_exposure_log("#items 5\nx 2:1\n"), er::ParseError);
  EXPECT_THROW(er::parse_exposure_log("#items 5\n1 2\n"), er::ParseError);
  EXPECT_THROW(er::parse_exposure_log("#items 5\n1\n"), er::ParseError);
  EXPECT_THROW(er::parse_exposure_log("#items 5\n1 2:1:4 3:0\n"), er::ParseError);
}

TEST(ParseExposureLog, SortsEventsByTimestamp) {
  auto ds = er::parse_exposure_log("#items 9\n1 5:1:30 6:0:10 7:1:20\n");
  const auto& ev = ds.sequences[0].events;
  EXPECT_EQ(ev[0].item, 6u);
  EXPECT_EQ(ev[1].item, 7u);
  EXPECT_EQ(ev[2].item, 5u);
}

TEST(ParseExposureLog, SerializeRoundTripsBitExactly) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    er::Rng rng(seed);
    auto ds = exrec_test::random_dataset(8, 1 + seed % 30, 40, rng);
    if (seed % 2) {
      for (auto& s : ds.sequences) {
        std::uint64_t ts = rng.uniform_int(0, 100);
        for (auto& e : s.events) e.timestamp = ts += rng.uniform_int(0, 5);
      }
    }
    ds.comments = {"provenance seed=" + std::to_string(seed)};
    const std::string text = er::serialize_exposure_log(ds);
    auto parsed = er::parse_exposure_log(text);
    EXPECT_EQ(parsed, ds);
    EXPECT_EQ(er::serialize_exposure_log(parsed), text);
  }
}

TEST(InteractionItems, KeepsLast50Interactions) {
  er::Rng rng(1);
  ExposureSequence s;
  for (ItemId i = 1; i <= 120; ++i) s.events.push_back({i, i % 2 == 0 ? 1 : 0, {}});
  auto items = er::interaction_items(s);
  ASSERT_EQ(items.size(), 50u);
  EXPECT_EQ(items.front(), 22u);
  EXPECT_EQ(items.back(), 120u);
}

// ---------------------------------------------------------------- state windows

TEST(BuildState, PadsShortPrefixOnTheLeft) {
  auto s = make_seq({4, 9}, {1, 0});
  auto w = er::build_state(s, 2, 10);
  ASSERT_EQ(w.size(), 10u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(w[i], (er::StatePair{er::kPaddingItem, er::kPaddingBehavior}));
  EXPECT_EQ(w[8], (er::StatePair{4, 1}));
  EXPECT_EQ(w[9], (er::StatePair{9, 0}));
}

TEST(BuildState, TruncatesToMostRecentEvents) {
  std::vector<ItemId> items;
  std::vector<int> beh;
  for (ItemId i = 1; i <= 20; ++i) {
    items.push_back(i);
    beh.push_back(static_cast<int>(i % 2));
  }
  auto w = er::build_state(make_seq(items, beh), 15, 10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(w[i].item, 6u + i);
}

TEST(BuildState, FirstPosition) {
  auto w = er::build_state(make_seq({3, 4, 5}, {0, 1, 1}), 1, 10);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(w[i].item, er::kPaddingItem);
  EXPECT_EQ(w[9], (er::StatePair{3, 0}));
}

TEST(BuildState, OutOfRangePositionIsIndexError) {
  auto s = make_seq({3, 4}, {0, 1});
  EXPECT_THROW(er::build_state(s, 0, 10), er::IndexError);
  EXPECT_THROW(er::build_state(s, 3, 10), er::IndexError);
}

TEST(BuildState, NeverContainsLaterEvents) {
  er::Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    // Distinct items make the position of every pair recoverable.
    const std::size_t n = 1 + rng.uniform_int(0, 39);
    ExposureSequence s;
    for (std::size_t i = 0; i < n; ++i) s.events.push_back({static_cast<ItemId>(i + 1), static_cast<int>(rng.uniform_int(0, 1)), {}});
    const std::size_t t = 1 + rng.uniform_int(0, n - 1);
    const std::size_t L = 1 + rng.uniform_int(0, 11);
    auto w = er::build_state(s, t, L);
    ASSERT_EQ(w.size(), L);
    for (const auto& p : w) {
      if (p.item != er::kPaddingItem) {
        ASSERT_LE(p.item, t);
      }
    }
  }
}

// ---------------------------------------------------------------- trajectories

TEST(BuildTrajectory, HandAppliedRewards) {
  auto traj = er::build_trajectory(make_seq({1, 2, 3}, {1, 0, 1}), {}, 20, 10);
  ASSERT_TRUE(traj);
  ASSERT_EQ(traj->size(), 2u);
  EXPECT_EQ(traj->steps[0].reward, 0.0);
  EXPECT_EQ(traj->steps[1].reward, 1.0);
  EXPECT_EQ(traj->steps[0].rtg, 1.0);
  EXPECT_EQ(traj->steps[1].rtg, 1.0);
  EXPECT_EQ(traj->steps[0].action, 2u);
  EXPECT_EQ(traj->steps[1].action, 3u);
}

TEST(BuildTrajectory, AllUninteractedGivesUniformRewards) {
  er::RewardConfig cfg{0.25, 1.0, 1.0};
  auto traj = er::build_trajectory(make_seq({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}), cfg, 20, 10);
  ASSERT_TRUE(traj);
  for (const auto& st : traj->steps) EXPECT_EQ(st.reward, 0.25);
  EXPECT_DOUBLE_EQ(traj->steps[0].rtg, 0.25 * 4);
}

TEST(BuildTrajectory, DiscountedGeometricSum) {
  er::RewardConfig cfg{0.0, 1.0, 0.5};
  auto traj = er::build_trajectory(make_seq({1, 2, 3}, {0, 1, 1}), cfg, 20, 10);
  ASSERT_TRUE(traj);
  EXPECT_DOUBLE_EQ(traj->steps[0].rtg, 1.5);
}

TEST(BuildTrajectory, ShortSequenceIsSkipped) {
  EXPECT_FALSE(er::build_trajectory(make_seq({1}, {1}), {}, 20, 10));
}

TEST(BuildTrajectory, KeepsLastTmaxSteps) {
  er::Rng rng(2);
  auto s = exrec_test::random_sequence(0, 40, 30, rng);
  auto traj = er::build_trajectory(s, {}, 20, 10);
  ASSERT_EQ(traj->size(), 20u);
  EXPECT_EQ(traj->steps.back().action, s.events.back().item);
  EXPECT_EQ(traj->steps.front().position, 20u);
}

TEST(BuildTrajectory, RtgRecurrenceHolds) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    er::Rng rng(seed);
    auto s = exrec_test::random_sequence(0, 2 + rng.uniform_int(0, 48), 30, rng);
    er::RewardConfig cfg{rng.normal(0.0, 0.2) - 0.5, 1.0 + rng.uniform(), 0.1 + 0.9 * rng.uniform()};
    auto traj = er::build_trajectory(s, cfg, 1 + rng.uniform_int(0, 24), 10);
    ASSERT_TRUE(traj);
    const auto& st = traj->steps;
    for (std::size_t t = 0; t < st.size(); ++t) {
      const double next = t + 1 < st.size() ? st[t + 1].rtg : 0.0;
      ASSERT_NEAR(st[t].rtg, st[t].reward + cfg.gamma * next, 1e-12);
    }
  }
}

TEST(BuildTrajectory, InvalidRewardConfigIsConfigError) {
  EXPECT_THROW((er::RewardConfig{1.0, 1.0, 1.0}.validate()), er::ConfigError);
  EXPECT_THROW((er::RewardConfig{0.0, 1.0, 0.0}.validate()), er::ConfigError);
  EXPECT_THROW((er::RewardConfig{0.0, 1.0, 1.5}.validate()), er::ConfigError);
}

TEST(BuildTrainingWindows, CoverEveryStepWithWindowLocalReturns) {
  er::Rng rng(9);
  auto s = exrec_test::random_sequence(0, 47, 30, rng);
  auto windows = er::build_training_windows(s, {}, 20, 10);
  ASSERT_EQ(windows.size(), 3u);
  std::size_t steps = 0;
  for (const auto& w : windows) {
    steps += w.size();
    EXPECT_LE(w.size(), 20u);
    const auto& st = w.steps;
    for (std::size_t t = 0; t < st.size(); ++t) {
      const double next = t + 1 < st.size() ? st[t + 1].rtg : 0.0;
      EXPECT_NEAR(st[t].rtg, st[t].reward + next, 1e-12);
    }
  }
  EXPECT_EQ(steps, 46u);
  EXPECT_EQ(windows.back().steps.back().action, s.events.back().item);
  EXPECT_TRUE(er::build_training_windows(make_seq({1}, {1}), {}, 20, 10).empty());
  EXPECT_THROW(er::build_training_windows(s, {}, 0, 10), er::ConfigError);
}

TEST(BuildInferenceTrajectory, RtgCountsRemainingInteractionsPlusOne) {
  auto s = make_seq({1, 2, 3, 4}, {1, 1, 1, 1});
  auto traj = er::build_inference_trajectory(s, {}, 20, 10);
  ASSERT_EQ(traj.size(), 4u);
  EXPECT_DOUBLE_EQ(traj.steps[0].rtg, 4.0);
  EXPECT_DOUBLE_EQ(traj.steps[3].rtg, 1.0);
  EXPECT_FALSE(traj.steps.back().has_action);
}

// ---------------------------------------------------------------- relabeling

std::vector<std::pair<ItemId, bool>> relabel_oracle(const ExposureSequence& s) {
  std::vector<std::pair<ItemId, bool>> out;
  for (std::size_t t = 0; t < s.size(); ++t) {
    std::pair<ItemId, bool> r{er::kPaddingItem, false};
    for (std::size_t k = t + 1; k < s.size(); ++k) {
      if (s.events[k].behavior == 1) {
        r = {s.events[k].item, true};
        break;
      }
    }
    out.push_back(r);
  }
  return out;
}

TEST(RelabelTargets, NextInteractedItem) {
  auto s = make_seq({11, 12, 13, 14, 15}, {0, 1, 0, 0, 1});
  auto r = er::relabel_targets(s);
  EXPECT_EQ(r.target[0], 12u);
  EXPECT_EQ(r.target[1], 15u);
  EXPECT_EQ(r.target[2], 15u);
  EXPECT_EQ(r.target[3], 15u);
  EXPECT_FALSE(r.valid[4]);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(r.valid[i]);
}

TEST(RelabelTargets, NoInteractionsMasksEverything) {
  auto r = er::relabel_targets(make_seq({1, 2, 3}, {0, 0, 0}));
  for (bool v : r.valid) EXPECT_FALSE(v);
}

TEST(RelabelTargets, TwoInteractions) {
  auto r = er::relabel_targets(make_seq({5, 6}, {1, 1}));
  EXPECT_TRUE(r.valid[0]);
  EXPECT_EQ(r.target[0], 6u);
  EXPECT_FALSE(r.valid[1]);
}

TEST(RelabelTargets, MatchesBruteForceScan) {
  er::Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = exrec_test::random_sequence(0, 1 + rng.uniform_int(0, 49), 25, rng, rng.uniform());
    auto r = er::relabel_targets(s);
    auto o = relabel_oracle(s);
    ASSERT_EQ(r.target.size(), s.size());
    for (std::size_t t = 0; t < s.size(); ++t) {
      ASSERT_EQ(r.valid[t], o[t].second);
      if (o[t].second) {
        ASSERT_EQ(r.target[t], o[t].first);
      }
    }
  }
}

TEST(RelabelTargets, TrajectoryTargetsFollowRelabeling) {
  er::Rng rng(3);
  auto s = exrec_test::random_sequence(0, 30, 25, rng);
  auto traj = er::build_trajectory(s, {}, 20, 10);
  auto o = relabel_oracle(s);
  for (const auto& st : traj->steps) {
    EXPECT_EQ(st.target_valid, o[st.position - 1].second);
    if (st.target_valid) {
      EXPECT_EQ(st.target, o[st.position - 1].first);
    }
  }
}

// ---------------------------------------------------------------- splitting

er::Dataset hundred() {
  er::Rng rng(5);
  return exrec_test::random_dataset(100, 5, 20, rng);
}

TEST(SplitDataset, DefaultRatios) {
  auto parts = er::split_dataset(hundred(), {0.8, 0.1, 0.1}, 1);
  EXPECT_EQ(parts[0].size(), 80u);
  EXPECT_EQ(parts[1].size(), 10u);
  EXPECT_EQ(parts[2].size(), 10u);
  std::vector<std::uint64_t> users;
  for (const auto& p : parts) {
    for (const auto& s : p.sequences) users.push_back(s.user);
  }
  std::sort(users.begin(), users.end());
  EXPECT_EQ(std::unique(users.begin(), users.end()), users.end());
  EXPECT_EQ(users.size(), 100u);
  EXPECT_EQ(parts[0].split, er::Split::kTrain);
  EXPECT_EQ(parts[2].split, er::Split::kTest);
}

TEST(SplitDataset, DeterministicUnderSeed) {
  auto a = er::split_dataset(hundred(), {0.8, 0.1, 0.1}, 42);
  auto b = er::split_dataset(hundred(), {0.8, 0.1, 0.1}, 42);
  auto c = er::split_dataset(hundred(), {0.8, 0.1, 0.1}, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a[1], c[1]);
}

TEST(SplitDataset, AllTrain) {
  auto parts = er::split_dataset(hundred(), {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(parts[0].size(), 100u);
  EXPECT_TRUE(parts[1].sequences.empty());
  EXPECT_TRUE(parts[2].sequences.empty());
}

TEST(SplitDataset, RatiosMustSumToOne) {
  EXPECT_THROW(er::split_dataset(hundred(), {0.8, 0.1, 0.2}, 1), er::ConfigError);
  EXPECT_THROW(er::split_dataset(hundred(), {1.1, -0.1, 0.0}, 1), er::ConfigError);
}

}  // namespace
