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

#include "exposurerec/sequence_backbone.hpp"

#include "exposurerec/errors.hpp"

namespace exposurerec {

void BackboneConfig::validate() const {
  if (num_items == 0) throw ConfigError("model needs a non-empty catalog");
  if (d == 0 || layers == 0 || heads == 0 || t_max == 0 || window == 0) {
    throw ConfigError("model sizes must be positive");
  }
  if (d % heads != 0) {
    throw ConfigError("embedding width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

SequenceBackbone::SequenceBackbone(const std::string& prefix, const BackboneConfig& cfg,
                                   Rng& rng) {
  cfg.validate();
  item_embedding = nn::make_param(prefix + "item_embedding", {cfg.num_items + 1, cfg.d}, &rng);
  item_embedding.pinned_zero_rows = {kPaddingItem};
  for (std::size_t j = 0; j < cfg.d; ++j) item_embedding.value.at(kPaddingItem, j) = 0.0;
  behavior_embedding = nn::make_param(prefix + "behavior_embedding", {kBehaviorVocab, cfg.d}, &rng);
  state_encoder = nn::GruCell(prefix + "state_encoder", cfg.d, cfg.d, rng);
  position_embedding = nn::make_param(prefix + "position_embedding", {cfg.t_max, cfg.d}, &rng);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    blocks.emplace_back(prefix + "block" + std::to_string(l), cfg.d, cfg.heads, rng);
  }
  final_norm = nn::LayerNorm(prefix + "final_norm", cfg.d);
}

ad::Var SequenceBackbone::encode_states(ad::Tape& tape,
                                        std::span<const StateWindow* const> windows) const {
  const std::size_t n = windows.size();
  const std::size_t d = width();
  if (n == 0) throw InputError("no state windows to encode");
  const std::size_t len = windows[0]->size();
  for (const StateWindow* w : windows) {
    if (w->size() != len) throw DimensionError("state windows of unequal length");
  }
  ad::Var items_table = tape.param(item_embedding);
  ad::Var behavior_table = tape.param(behavior_embedding);
  ad::Var h = tape.constant(NdArray({n, d}, 0.0));
  std::vector<std::size_t> items(n), behaviors(n);
  for (std::size_t slot = 0; slot < len; ++slot) {
    for (std::size_t i = 0; i < n; ++i) {
      items[i] = (*windows[i])[slot].item;
      behaviors[i] = static_cast<std::size_t>((*windows[i])[slot].behavior);
    }
    ad::Var x = ad::add(ad::embedding(items_table, items), ad::embedding(behavior_table, behaviors));
    h = nn::gru_cell(tape, x, h, state_encoder);
  }
  return h;
}

ad::Var SequenceBackbone::transform(ad::Tape& tape, const ad::Var& tokens,
                                    std::span<const std::size_t> segment_lengths,
                                    const nn::BlockOptions& opts) const {
  ad::Var x = tokens;
  for (const auto& block : blocks) x = block(tape, x, segment_lengths, opts);
  return final_norm(tape, x);
}

void SequenceBackbone::collect(std::vector<Parameter*>& out) {
  out.push_back(&item_embedding);
  out.push_back(&behavior_embedding);
  state_encoder.collect(out);
  out.push_back(&position_embedding);
  for (auto& b : blocks) b.collect(out);
  final_norm.collect(out);
}

void SequenceBackbone::collect(std::vector<const Parameter*>& out) const {
  out.push_back(&item_embedding);
  out.push_back(&behavior_embedding);
  state_encoder.collect(out);
  out.push_back(&position_embedding);
  for (const auto& b : blocks) b.collect(out);
  final_norm.collect(out);
}

}  // namespace exposurerec
