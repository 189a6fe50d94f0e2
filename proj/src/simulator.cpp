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

#include "exposurerec/simulator.hpp"

#include <cmath>

#include "exposurerec/errors.hpp"
#include "exposurerec/log.hpp"

namespace exposurerec {

void SimulatorConfig::validate() const {
  backbone().validate();
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

SimulatorModel::SimulatorModel(const SimulatorConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  backbone = SequenceBackbone("", config_.backbone(), rng);
  head = nn::Linear("head", config_.d, 1, rng, /*zero_weight=*/true);
}

std::vector<Parameter*> SimulatorModel::parameters() {
  std::vector<Parameter*> out;
  backbone.collect(out);
  head.collect(out);
  return out;
}

std::vector<const Parameter*> SimulatorModel::parameters() const {
  std::vector<const Parameter*> out;
  backbone.collect(out);
  head.collect(out);
  return out;
}

Trajectory simulator_context(const ExposureSequence& prefix, ItemId candidate, std::size_t t_max,
                             std::size_t window) {
  const std::size_t n = prefix.events.size();
  if (n == 0) throw InputError("simulator context needs a non-empty prefix");
  const std::size_t first = n > t_max ? n - t_max + 1 : 1;
  Trajectory traj;
  for (std::size_t t = first; t <= n; ++t) {
    TrajectoryStep st;
    st.state = build_state(prefix, t, window);
    st.position = t;
    st.has_action = true;
    if (t < n) {
      st.action = prefix.events[t].item;
      st.action_behavior = prefix.events[t].behavior;
    } else {
      st.action = candidate;
    }
    traj.steps.push_back(std::move(st));
  }
  return traj;
}

std::optional<Trajectory> simulator_example(const ExposureSequence& seq, std::size_t t_max,
                                            std::size_t window) {
  // Rewards are irrelevant here; only states, actions and action feedback are used.
  return build_trajectory(seq, RewardConfig{}, t_max, window);
}

TokenBatch embed_simulator_contexts(ad::Tape& tape, const SimulatorModel& model,
                                    std::span<const Trajectory> batch) {
  if (batch.empty()) throw InputError("empty simulator batch");
  std::vector<const StateWindow*> windows;
  std::vector<std::size_t> actions;
  for (const auto& traj : batch) {
    if (traj.steps.empty()) throw InputError("simulator context without steps");
    if (traj.steps.size() > model.config().t_max) {
      throw DimensionError("context of " + std::to_string(traj.steps.size()) +
                           " steps exceeds t_max " + std::to_string(model.config().t_max));
    }
    for (const auto& st : traj.steps) {
      if (!st.has_action) throw InputError("simulator context must end with an action token");
      if (st.action == kPaddingItem || st.action > model.num_items()) {
        throw IndexError("action item " + std::to_string(st.action) + " outside catalog");
      }
      windows.push_back(&st.state);
      actions.push_back(st.action);
    }
  }
  const std::size_t n_steps = windows.size();
  ad::Var states = model.backbone.encode_states(tape, windows);
  ad::Var acts = ad::tanh(ad::embedding(tape.param(model.backbone.item_embedding), actions));
  std::vector<ad::Var> parts{states, acts};
  ad::Var stacked = ad::concat_rows(parts);

  TokenBatch out;
  std::vector<std::size_t> order, positions;
  std::size_t base = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t T = batch[b].steps.size();
    for (std::size_t i = 0; i < T; ++i) {
      order.push_back(base + i);
      positions.push_back(i);
      order.push_back(n_steps + base + i);
      positions.push_back(i);
      out.readout_rows.push_back(order.size() - 1);
      out.step_trajectory.push_back(b);
      out.step_index.push_back(i);
    }
    out.segment_lengths.push_back(2 * T);
    base += T;
  }
  out.tokens = ad::add(ad::gather_rows(stacked, order),
                       ad::embedding(tape.param(model.backbone.position_embedding), positions));
  return out;
}

ad::Var simulator_logits(ad::Tape& tape, const SimulatorModel& model, const TokenBatch& tokens,
                         const nn::BlockOptions& opts) {
  ad::Var h = model.backbone.transform(tape, tokens.tokens, tokens.segment_lengths, opts);
  return model.head(tape, ad::gather_rows(h, tokens.readout_rows));
}

std::vector<double> forward_reward_batch(std::span<const Trajectory> contexts,
                                         const SimulatorModel& model) {
  ad::Tape tape(false);
  TokenBatch tokens = embed_simulator_contexts(tape, model, contexts);
  ad::Var h = model.backbone.transform(tape, tokens.tokens, tokens.segment_lengths, {});
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < tokens.readout_rows.size(); ++i) {
    if (tokens.step_index[i] + 1 == contexts[tokens.step_trajectory[i]].steps.size()) {
      rows.push_back(tokens.readout_rows[i]);
    }
  }
  const NdArray logits = model.head(tape, ad::gather_rows(h, rows)).value();
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = logits[i];
    p[i] = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  return p;
}

double forward_reward(const Trajectory& context, const SimulatorModel& model) {
  return forward_reward_batch(std::span<const Trajectory>(&context, 1), model).front();
}

ad::Var simulator_loss(ad::Tape& tape, const SimulatorModel& model,
                       std::span<const Trajectory> batch, const nn::BlockOptions& opts) {
  std::vector<int> labels;
  for (const auto& traj : batch) {
    for (const auto& st : traj.steps) {
      if (st.action_behavior != 0 && st.action_behavior != 1) {
        throw DomainError("simulator training label must be 0 or 1");
      }
      labels.push_back(st.action_behavior);
    }
  }
  TokenBatch tokens = embed_simulator_contexts(tape, model, batch);
  return ad::binary_cross_entropy(simulator_logits(tape, model, tokens, opts), labels);
}

double simulator_training_step(SimulatorModel& model, nn::AdamState& optimizer,
                               std::span<const Trajectory> batch, Rng& rng) {
  if (batch.empty()) throw UsageError("simulator training step on an empty batch");
  ad::Tape tape;
  nn::BlockOptions opts{model.config().dropout, true, &rng};
  ad::Var loss = simulator_loss(tape, model, batch, opts);
  tape.backward(loss);
  std::vector<Parameter*> params = model.parameters();
  std::vector<NdArray> grads;
  grads.reserve(params.size());
  for (const Parameter* p : params) grads.push_back(tape.grad(*p));
  nn::adam_update(params, grads, optimizer);
  ++model.training_steps;
  return loss.value()[0];
}

int feedback_from_probability(double p, FeedbackMode mode, Rng& rng) {
  if (mode == FeedbackMode::kThreshold) return p >= 0.5 ? 1 : 0;
  return rng.bernoulli(p) ? 1 : 0;
}

int predict_feedback(const Trajectory& context, const SimulatorModel& model, FeedbackMode mode,
                     Rng& rng) {
  return feedback_from_probability(forward_reward(context, model), mode, rng);
}

}  // namespace exposurerec
