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


// Counterfactual exposure sequences and the augmented training loop.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exposurerec/exposure_data.hpp"
#include "exposurerec/ndarray.hpp"
#include "exposurerec/recommender.hpp"
#include "exposurerec/rng.hpp"
#include "exposurerec/simulator.hpp"
#include "exposurerec/training.hpp"

namespace exposurerec {

enum class Strategy { kNone, kRandom, kSelfImproving };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

struct AugmentationConfig {
  Strategy strategy = Strategy::kSelfImproving;
  double delta = 1.0;
  std::size_t h = 10;
  // Negative selects 0.1 x RMS of the current item-embedding entries.
  double sigma = -1.0;
  std::size_t max_epochs = 10;
  std::uint64_t seed = 0;
  // Train on D plus D_aug; false trains on D_aug alone.
  bool include_original = true;
  SamplingConfig sampling;
  FeedbackMode feedback = FeedbackMode::kSample;

  void validate() const;
};

// Uniform draw over items 1..catalog_size.
ItemId sample_replacement_random(std::size_t catalog_size, Rng& rng);

// 0.1 x root-mean-square of the real item rows of an embedding table.
double default_sigma(const NdArray& item_embedding);

// Item (excluding `exclude` and padding) whose row has the largest cosine
// similarity to `vec`; ties go to the smaller id. Zero rows score 0.
ItemId snap_to_nearest(std::span<const double> vec, ItemId exclude, const NdArray& item_embedding);

// Perturbs row `item` with N(0, sigma^2) noise and snaps it back onto the
// catalog. A zero-norm draw is retried up to 10 times before falling back to
// a uniform item other than `item`.
ItemId perturb_and_snap(ItemId item, const NdArray& item_embedding, double sigma, Rng& rng);

struct GenerationSettings {
  Strategy strategy = Strategy::kSelfImproving;
  std::size_t h = 10;
  double sigma = 0.0;
  SamplingConfig sampling;
  FeedbackMode feedback = FeedbackMode::kSample;
};

// Prefix followed by h counterfactual events: v_k replaced, then h - 1 more
// items, each labelled by the simulator.
ExposureSequence generate_counterfactual_sequence(const ExposureSequence& prefix, ItemId original,
                                                  const GenerationSettings& settings,
                                                  const RecommenderModel& recommender,
                                                  const SimulatorModel& simulator, Rng& rng);

// Batched form; sequence i draws only from rngs[i], so the output equals
// calling the single form once per sequence.
std::vector<ExposureSequence> generate_counterfactual_batch(
    std::span<const ExposureSequence> prefixes, std::span<const ItemId> originals,
    const GenerationSettings& settings, const RecommenderModel& recommender,
    const SimulatorModel& simulator, std::span<Rng> rngs);

// Smallest m with m / n >= delta, at least 1.
std::size_t augmented_target_size(std::size_t n, double delta);

// One fresh D_aug: cut point k uniform in [2, max(2, len - 1)] per source,
// sources visited in shuffled passes over D.
Dataset build_augmented_dataset(const Dataset& train, const AugmentationConfig& cfg,
                                const RecommenderModel& recommender,
                                const SimulatorModel& simulator, Rng& rng);

struct CaseRecResult {
  TrainingReport report;
  Dataset last_augmented;
};

// Phase 1 trains on D unless `pretrained` is set; then each augmentation
// epoch rebuilds D_aug and trains one pass on D with D_aug. The returned
// model is the best augmentation epoch by validation NDCG@K.
CaseRecResult run_caserec_training(RecommenderModel& model, nn::AdamState& optimizer,
                                   const SimulatorModel& simulator, const Dataset& train,
                                   const Dataset& valid, const AugmentationConfig& cfg,
                                   const TrainingOptions& options, bool pretrained = false);

}  // namespace exposurerec
