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

#include "exposurerec/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exposurerec/errors.hpp"
#include "exposurerec/log.hpp"

namespace exposurerec {

void RecommenderConfig::validate() const {
  backbone().validate();
  reward.validate();
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

RecommenderModel::RecommenderModel(const RecommenderConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  backbone = SequenceBackbone("", config_.backbone(), rng);
  rtg_encoder = nn::Linear("rtg_encoder", 1, config_.d, rng);
  head = nn::Linear("head", config_.d, config_.num_items, rng);
}

std::vector<Parameter*> RecommenderModel::parameters() {
  std::vector<Parameter*> out;
  backbone.collect(out);
  rtg_encoder.collect(out);
  head.collect(out);
  return out;
}

std::vector<const Parameter*> RecommenderModel::parameters() const {
  std::vector<const Parameter*> out;
  backbone.collect(out);
  rtg_encoder.collect(out);
  head.collect(out);
  return out;
}

NdArray encode_state(const StateWindow& window, const RecommenderModel& model) {
  if (window.size() != model.config().window) {
    throw DimensionError("state window of " + std::to_string(window.size()) +
                         " pairs, model expects " + std::to_string(model.config().window));
  }
  ad::Tape tape(false);
  const StateWindow* w[1] = {&window};
  NdArray h = model.backbone.encode_states(tape, w).value();
  return h.reshaped({h.cols()});
}

TokenBatch embed_trajectories(ad::Tape& tape, const RecommenderModel& model,
                              std::span<const Trajectory> batch) {
  if (batch.empty()) throw InputError("empty trajectory batch");
  const std::size_t d = model.config().d;
  std::vector<const StateWindow*> windows;
  std::vector<double> rtgs;
  std::vector<std::size_t> actions;
  for (const auto& traj : batch) {
    if (traj.steps.empty()) throw InputError("trajectory without steps");
    if (traj.steps.size() > model.config().t_max) {
      throw DimensionError("trajectory of " + std::to_string(traj.steps.size()) +
                           " steps exceeds t_max " + std::to_string(model.config().t_max));
    }
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
      const auto& st = traj.steps[i];
      windows.push_back(&st.state);
      rtgs.push_back(st.rtg);
      if (i + 1 < traj.steps.size()) {
        if (!st.has_action) throw InputError("non-final trajectory step without an action");
        if (st.action > model.num_items()) {
          throw IndexError("action item " + std::to_string(st.action) + " outside catalog");
        }
        actions.push_back(st.action);
      }
    }
  }
  const std::size_t n_steps = windows.size();
  ad::Var states = model.backbone.encode_states(tape, windows);
  ad::Var rtg_tokens =
      ad::tanh(model.rtg_encoder(tape, tape.constant(NdArray({n_steps, 1}, std::move(rtgs)))));
  std::vector<ad::Var> parts{rtg_tokens, states};
  if (!actions.empty()) {
    parts.push_back(ad::tanh(ad::embedding(tape.param(model.backbone.item_embedding), actions)));
  }
  ad::Var stacked = ad::concat_rows(parts);

  TokenBatch out;
  std::vector<std::size_t> order;
  std::vector<std::size_t> positions;
  std::size_t step_base = 0;
  std::size_t action_base = 2 * n_steps;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t T = batch[b].steps.size();
    for (std::size_t i = 0; i < T; ++i) {
      order.push_back(step_base + i);
      positions.push_back(i);
      out.readout_rows.push_back(order.size());
      out.step_trajectory.push_back(b);
      out.step_index.push_back(i);
      order.push_back(n_steps + step_base + i);
      positions.push_back(i);
      if (i + 1 < T) {
        order.push_back(action_base++);
        positions.push_back(i);
      }
    }
    out.segment_lengths.push_back(3 * T - 1);
    step_base += T;
  }
  (void)d;
  out.tokens = ad::add(ad::gather_rows(stacked, order),
                       ad::embedding(tape.param(model.backbone.position_embedding), positions));
  return out;
}

NdArray embed_trajectory(const Trajectory& traj, const RecommenderModel& model) {
  ad::Tape tape(false);
  return embed_trajectories(tape, model, std::span<const Trajectory>(&traj, 1)).tokens.value();
}

namespace {

ad::Var readout_logits(ad::Tape& tape, const RecommenderModel& model, const TokenBatch& tokens,
                       std::span<const std::size_t> rows, const nn::BlockOptions& opts) {
  ad::Var h = model.backbone.transform(tape, tokens.tokens, tokens.segment_lengths, opts);
  return model.head(tape, ad::gather_rows(h, rows));
}

}  // namespace

ad::Var forward_logits(ad::Tape& tape, const RecommenderModel& model, const TokenBatch& tokens,
                       const nn::BlockOptions& opts) {
  return readout_logits(tape, model, tokens, tokens.readout_rows, opts);
}

NdArray forward_logits(const Trajectory& traj, const RecommenderModel& model) {
  ad::Tape tape(false);
  TokenBatch tokens = embed_trajectories(tape, model, std::span<const Trajectory>(&traj, 1));
  return forward_logits(tape, model, tokens, {}).value();
}

NdArray final_step_logits(const RecommenderModel& model, std::span<const Trajectory> batch) {
  ad::Tape tape(false);
  TokenBatch tokens = embed_trajectories(tape, model, batch);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < tokens.readout_rows.size(); ++i) {
    const std::size_t b = tokens.step_trajectory[i];
    if (tokens.step_index[i] + 1 == batch[b].steps.size()) rows.push_back(tokens.readout_rows[i]);
  }
  return readout_logits(tape, model, tokens, rows, {}).value();
}

std::optional<ad::Var> recommender_loss(ad::Tape& tape, const RecommenderModel& model,
                                        std::span<const Trajectory> batch,
                                        const nn::BlockOptions& opts) {
  std::vector<std::int64_t> targets;
  bool any = false;
  for (const auto& traj : batch) {
    for (const auto& st : traj.steps) {
      if (st.target_valid) {
        if (st.target == kPaddingItem || st.target > model.num_items()) {
          throw IndexError("target item " + std::to_string(st.target) + " outside catalog");
        }
        targets.push_back(static_cast<std::int64_t>(st.target) - 1);
        any = true;
      } else {
        targets.push_back(-1);
      }
    }
  }
  if (!any) return std::nullopt;
  TokenBatch tokens = embed_trajectories(tape, model, batch);
  return ad::cross_entropy(forward_logits(tape, model, tokens, opts), targets);
}

std::optional<double> training_step(RecommenderModel& model, nn::AdamState& optimizer,
                                    std::span<const Trajectory> batch, Rng& rng) {
  if (batch.empty()) throw UsageError("training_step on an empty batch");
  ad::Tape tape;
  nn::BlockOptions opts{model.config().dropout, true, &rng};
  auto loss = recommender_loss(tape, model, batch, opts);
  if (!loss) {
    log::warn("training batch has no unmasked step; skipping update");
    return std::nullopt;
  }
  tape.backward(*loss);
  std::vector<Parameter*> params = model.parameters();
  std::vector<NdArray> grads;
  grads.reserve(params.size());
  for (const Parameter* p : params) grads.push_back(tape.grad(*p));
  const double value = loss->value()[0];
  nn::adam_update(params, grads, optimizer);
  ++model.training_steps;
  return value;
}

std::vector<ItemId> rank_items(std::span<const double> logits, std::size_t k) {
  std::vector<std::size_t> idx(logits.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
                    });
  std::vector<ItemId> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = static_cast<ItemId>(idx[i] + 1);
  return out;
}

namespace {

ExposureSequence as_interactions(std::span<const ItemId> items, std::size_t num_items) {
  ExposureSequence seq;
  for (ItemId v : items) {
    if (v == kPaddingItem || v > num_items) {
      throw IndexError("history item " + std::to_string(v) + " outside catalog");
    }
    seq.events.push_back(ExposureEvent{v, 1, std::nullopt});
  }
  return seq;
}

}  // namespace

std::vector<std::vector<ItemId>> recommend_topk_batch(
    std::span<const std::vector<ItemId>> histories, std::size_t k, const RecommenderModel& model) {
  if (k < 1) throw ConfigError("top-k requires k >= 1");
  std::vector<Trajectory> trajs;
  trajs.reserve(histories.size());
  for (const auto& h : histories) {
    if (h.empty()) throw InputError("empty interaction sequence");
    trajs.push_back(build_inference_trajectory(as_interactions(h, model.num_items()),
                                               model.config().reward, model.config().t_max,
                                               model.config().window));
  }
  std::vector<std::vector<ItemId>> out;
  if (trajs.empty()) return out;
  const NdArray logits = final_step_logits(model, trajs);
  for (std::size_t b = 0; b < trajs.size(); ++b) out.push_back(rank_items(logits.row(b), k));
  return out;
}

std::vector<ItemId> recommend_topk(std::span<const ItemId> interactions, std::size_t k,
                                   const RecommenderModel& model) {
  std::vector<ItemId> h(interactions.begin(), interactions.end());
  return recommend_topk_batch(std::span<const std::vector<ItemId>>(&h, 1), k, model).front();
}

ItemId sample_from_logits(std::span<const double> logits, const SamplingConfig& sampling,
                          Rng& rng) {
  if (logits.empty()) throw InputError("sampling from empty logits");
  if (sampling.mode == SamplingMode::kGreedy) return rank_items(logits, 1).front();
  if (!(sampling.temperature > 0.0)) throw ConfigError("sampling temperature must be positive");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  double z = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    z += (w[j] = std::exp((logits[j] - m) / sampling.temperature));
  }
  double u = rng.uniform() * z;
  for (std::size_t j = 0; j < w.size(); ++j) {
    u -= w[j];
    if (u < 0.0) return static_cast<ItemId>(j + 1);
  }
  // Rounding left u marginally non-negative; fall back to the last positive weight.
  for (std::size_t j = w.size(); j-- > 0;) {
    if (w[j] > 0.0) return static_cast<ItemId>(j + 1);
  }
  return 1;
}

ItemId generate_next_item(const ExposureSequence& prefix, const RecommenderModel& model,
                          const SamplingConfig& sampling, Rng& rng) {
  if (prefix.events.empty()) throw InputError("generation needs a non-empty prefix");
  Trajectory traj = build_inference_trajectory(prefix, model.config().reward,
                                               model.config().t_max, model.config().window);
  const NdArray logits = final_step_logits(model, std::span<const Trajectory>(&traj, 1));
  return sample_from_logits(logits.row(0), sampling, rng);
}

}  // namespace exposurerec
