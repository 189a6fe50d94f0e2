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


// Latent-factor ground truth: p(u, v) = sigmoid(slope * <u, v> + offset).

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exposurerec/exposure_data.hpp"
#include "exposurerec/metrics.hpp"
#include "exposurerec/ndarray.hpp"
#include "exposurerec/recommender.hpp"
#include "exposurerec/simulator.hpp"

namespace exposurerec {

struct WorldOptions {
  double slope = 2.0;
  // Offset is bisected until the mean click probability over all pairs
  // equals this target; it must lie in [0.05, 0.3].
  double target_click_rate = 0.15;
};

struct SyntheticWorld {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t factors = 0;
  NdArray user_factors;  // [U x f]
  NdArray item_factors;  // [V x f], row i is item i + 1
  double slope = 1.0;
  double offset = 0.0;
  std::uint64_t seed = 0;

  // `user` is 0-based, `item` is a catalog id in [1, V].
  double affinity(std::size_t user, ItemId item) const;
  double click_probability(std::size_t user, ItemId item) const;
  // Affinities of one user over the whole catalog, index i is item i + 1.
  std::vector<double> affinities(std::size_t user) const;
  double mean_click_probability() const;

  friend bool operator==(const SyntheticWorld&, const SyntheticWorld&) = default;
};

SyntheticWorld generate_world(std::size_t users, std::size_t items, std::size_t factors,
                              std::uint64_t seed, const WorldOptions& options = {});

// Offset giving the requested mean click probability for fixed factors.
double calibrate_offset(const SyntheticWorld& world, double target_click_rate);

enum class PolicyKind { kBiasedSoftmax, kUniform };

struct LoggingPolicy {
  PolicyKind kind = PolicyKind::kBiasedSoftmax;
  double temperature = 1.0;
  std::size_t slate_size = 1;

  void validate() const;
};

// Exposure distribution of one user over the catalog (sums to 1).
std::vector<double> exposure_probabilities(const SyntheticWorld& world, const LoggingPolicy& policy,
                                           std::size_t user);

// One sequence per user in `users` with steps * slate_size events. Each user
// has its own generator derived from (seed, user), so output for a user does
// not depend on which other users are simulated.
Dataset simulate_logs(const SyntheticWorld& world, const LoggingPolicy& policy,
                      std::span<const std::size_t> users, std::size_t steps, std::uint64_t seed);
Dataset simulate_logs(const SyntheticWorld& world, const LoggingPolicy& policy, std::size_t steps,
                      std::uint64_t seed);

// True top-k items of a user by affinity, ties by ascending id.
std::vector<ItemId> true_top_items(const SyntheticWorld& world, std::size_t user, std::size_t k);

// Scores ranked lists against each user's true top-K: recall = |hits| / K,
// NDCG = DCG over hits / ideal DCG. Users whose id is outside the world are
// rejected with an IndexError.
MetricsReport oracle_metrics(const SyntheticWorld& world, std::span<const std::uint64_t> users,
                             std::span<const std::vector<ItemId>> lists,
                             std::span<const std::size_t> ks);

// Recommends from each test user's interaction history and scores the lists
// with oracle_metrics. Users with no interaction are excluded and counted.
MetricsReport ground_truth_eval(const RecommenderModel& model, const SyntheticWorld& world,
                                const Dataset& test, std::span<const std::size_t> ks);

struct SimulatorQuality {
  double auc = 0.0;       // predicted P(feedback) against logged feedback
  double spearman = 0.0;  // predicted P(feedback) against true click probability
  std::size_t events = 0;
};

// Scores every action position of each test sequence's training windows.
SimulatorQuality evaluate_simulator(const SimulatorModel& model, const SyntheticWorld& world,
                                    const Dataset& test);

// Gini coefficient of per-item exposure counts over the catalog.
double exposure_gini(const Dataset& ds);

std::string serialize_world(const SyntheticWorld& world);
SyntheticWorld parse_world(const std::string& bytes);
void save_world(const SyntheticWorld& world, const std::string& path);
SyntheticWorld load_world(const std::string& path);

}  // namespace exposurerec
