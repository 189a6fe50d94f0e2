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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "exposurerec/exposure_data.hpp"
#include "exposurerec/nn.hpp"
#include "exposurerec/recommender.hpp"
#include "exposurerec/simulator.hpp"

namespace exposurerec {

struct TrainingOptions {
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::size_t batch_size = 32;
  std::size_t eval_k = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string phase;  // "base", "augment" or "simulator"
  double loss = 0.0;
  std::size_t batches = 0;
  std::size_t augmented = 0;
  double ratio = 0.0;
  // Validation NDCG@K for the recommender, BCE for the simulator; NaN when
  // no validation set was given.
  double validation = std::numeric_limits<double>::quiet_NaN();

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation = std::numeric_limits<double>::quiet_NaN();
  std::string validation_metric;

  std::string serialize() const;
};

std::vector<Trajectory> recommender_examples(const Dataset& ds, const RecommenderConfig& cfg);
std::vector<Trajectory> simulator_examples(const Dataset& ds, const SimulatorConfig& cfg);

// One shuffled pass; returns the mean loss over batches that produced one.
double recommender_epoch(RecommenderModel& model, nn::AdamState& optimizer,
                         std::span<const Trajectory> examples, std::size_t batch_size, Rng& rng,
                         std::size_t* batches = nullptr);
double simulator_epoch(SimulatorModel& model, nn::AdamState& optimizer,
                       std::span<const Trajectory> examples, std::size_t batch_size, Rng& rng,
                       std::size_t* batches = nullptr);

double validation_ndcg(const RecommenderModel& model, const Dataset& valid, std::size_t k);
// Mean BCE over every action position, evaluation mode.
double simulator_validation_loss(const SimulatorModel& model,
                                 std::span<const Trajectory> examples);

// Trains until max_epochs or until validation has not improved for
// `patience` epochs, then restores the best model and optimizer state.
// Without a validation set every epoch runs and the last state is kept.
TrainingReport train_recommender(RecommenderModel& model, nn::AdamState& optimizer,
                                 const Dataset& train, const Dataset* valid,
                                 const TrainingOptions& options);
TrainingReport train_simulator(SimulatorModel& model, nn::AdamState& optimizer,
                               const Dataset& train, const Dataset* valid,
                               const TrainingOptions& options);

}  // namespace exposurerec
