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

// Feedback simulator: a causal transformer over (s_1, a_1, ..., s_T, a_T)
// whose readout at every action token is the logit of positive feedback on
// that action. Trained on all action positions; queried at the last one.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "exposurerec/exposure_data.hpp"
#include "exposurerec/nn.hpp"
#include "exposurerec/sequence_backbone.hpp"

namespace exposurerec {

struct SimulatorConfig {
  std::size_t num_items = 0;
  std::size_t d = 64;
  std::size_t layers = 2;
  std::size_t heads = 8;
  std::size_t t_max = 20;
  std::size_t window = 10;
  double dropout = 0.1;
  double learning_rate = 1e-3;

  BackboneConfig backbone() const { return {num_items, d, layers, heads, t_max, window, dropout}; }
  void validate() const;
};

class SimulatorModel {
 public:
  SimulatorModel() = default;
  SimulatorModel(const SimulatorConfig& config, Rng& rng);

  const SimulatorConfig& config() const { return config_; }
  std::size_t num_items() const { return config_.num_items; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  std::uint64_t training_steps = 0;

  SequenceBackbone backbone;
  nn::Linear head;  // d -> 1, zero-initialised weight

 private:
  SimulatorConfig config_;
};

// Context for scoring `candidate` right after `prefix`: steps over the prefix
// positions whose last action is the candidate. The prefix must be non-empty.
Trajectory simulator_context(const ExposureSequence& prefix, ItemId candidate, std::size_t t_max,
                             std::size_t window);

// Training example from a logged sequence: every step's action carries its
// observed feedback. Sequences shorter than 2 yield nullopt.
std::optional<Trajectory> simulator_example(const ExposureSequence& seq, std::size_t t_max,
                                            std::size_t window);

TokenBatch embed_simulator_contexts(ad::Tape& tape, const SimulatorModel& model,
                                    std::span<const Trajectory> batch);

// Logits [steps x 1] at every action token.
ad::Var simulator_logits(ad::Tape& tape, const SimulatorModel& model, const TokenBatch& tokens,
                         const nn::BlockOptions& opts);

// P(feedback = 1) for the final action of each context. Every context must
// end in an action step.
double forward_reward(const Trajectory& context, const SimulatorModel& model);
std::vector<double> forward_reward_batch(std::span<const Trajectory> contexts,
                                         const SimulatorModel& model);

// Mean BCE over every action position of the batch.
ad::Var simulator_loss(ad::Tape& tape, const SimulatorModel& model,
                       std::span<const Trajectory> batch, const nn::BlockOptions& opts);

double simulator_training_step(SimulatorModel& model, nn::AdamState& optimizer,
                               std::span<const Trajectory> batch, Rng& rng);

enum class FeedbackMode { kSample, kThreshold };

int feedback_from_probability(double p, FeedbackMode mode, Rng& rng);
int predict_feedback(const Trajectory& context, const SimulatorModel& model, FeedbackMode mode,
                     Rng& rng);

}  // namespace exposurerec
