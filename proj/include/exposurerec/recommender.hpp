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

// Decision-transformer recommender over exposure trajectories.
//
// Each step t contributes the tokens (rtg_t, s_t, a_t); the final step of
// every trajectory stops at s_T. The state token readout at every step is
// mapped by a separate output head to logits over the catalog, and training
// targets are the relabeled next interacted items.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "exposurerec/exposure_data.hpp"
#include "exposurerec/nn.hpp"
#include "exposurerec/sequence_backbone.hpp"

namespace exposurerec {

struct RecommenderConfig {
  std::size_t num_items = 0;
  std::size_t d = 64;
  std::size_t layers = 2;
  std::size_t heads = 8;
  std::size_t t_max = 20;
  std::size_t window = 10;
  double dropout = 0.1;
  double learning_rate = 1e-3;
  RewardConfig reward;

  BackboneConfig backbone() const { return {num_items, d, layers, heads, t_max, window, dropout}; }
  void validate() const;
};

class RecommenderModel {
 public:
  RecommenderModel() = default;
  RecommenderModel(const RecommenderConfig& config, Rng& rng);

  const RecommenderConfig& config() const { return config_; }
  std::size_t num_items() const { return config_.num_items; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  // Optimizer steps applied so far; zero means untrained.
  std::uint64_t training_steps = 0;

  SequenceBackbone backbone;
  nn::Linear rtg_encoder;  // scalar -> d
  nn::Linear head;         // d -> num_items; column j scores item j + 1

 private:
  RecommenderConfig config_;
};

// Final GRU state of one window, [d].
NdArray encode_state(const StateWindow& window, const RecommenderModel& model);

TokenBatch embed_trajectories(ad::Tape& tape, const RecommenderModel& model,
                              std::span<const Trajectory> batch);
// Token matrix [(3T - 1) x d] of a single trajectory, evaluation mode.
NdArray embed_trajectory(const Trajectory& traj, const RecommenderModel& model);

// Logits [steps x num_items] for every readout row of the batch.
ad::Var forward_logits(ad::Tape& tape, const RecommenderModel& model, const TokenBatch& tokens,
                       const nn::BlockOptions& opts);
NdArray forward_logits(const Trajectory& traj, const RecommenderModel& model);

// Logits of the final step of each trajectory, [batch x num_items], eval mode.
NdArray final_step_logits(const RecommenderModel& model, std::span<const Trajectory> batch);

// Mean relabeled cross-entropy over unmasked steps on a tape, without
// updating anything. Returns nullopt when every step is masked.
std::optional<ad::Var> recommender_loss(ad::Tape& tape, const RecommenderModel& model,
                                        std::span<const Trajectory> batch,
                                        const nn::BlockOptions& opts);

// One Adam step on the batch. Returns nullopt (and warns) when the batch has
// no unmasked step; the model is then left untouched.
std::optional<double> training_step(RecommenderModel& model, nn::AdamState& optimizer,
                                    std::span<const Trajectory> batch, Rng& rng);

// Items ranked by descending logit, ties by ascending id.
std::vector<ItemId> rank_items(std::span<const double> logits, std::size_t k);

// Top-k next items for an interaction history (every event treated as
// interacted).
std::vector<ItemId> recommend_topk(std::span<const ItemId> interactions, std::size_t k,
                                   const RecommenderModel& model);
std::vector<std::vector<ItemId>> recommend_topk_batch(
    std::span<const std::vector<ItemId>> histories, std::size_t k, const RecommenderModel& model);

enum class SamplingMode { kGreedy, kCategorical };

struct SamplingConfig {
  SamplingMode mode = SamplingMode::kCategorical;
  double temperature = 1.0;
};

ItemId sample_from_logits(std::span<const double> logits, const SamplingConfig& sampling, Rng& rng);

// Next exposure proposed by the recommender for an exposure prefix, using the
// inference return-to-go rule.
ItemId generate_next_item(const ExposureSequence& prefix, const RecommenderModel& model,
                          const SamplingConfig& sampling, Rng& rng);

}  // namespace exposurerec
