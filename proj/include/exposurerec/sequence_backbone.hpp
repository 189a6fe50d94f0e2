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

// Components shared by the recommender and the feedback simulator: the
// item/behavior embedding tables, the GRU state encoder, per-timestep position
// embeddings and the causal transformer stack. Each model owns its own
// instance; nothing is shared between models at runtime.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "exposurerec/exposure_data.hpp"
#include "exposurerec/nn.hpp"

namespace exposurerec {

struct BackboneConfig {
  std::size_t num_items = 0;
  std::size_t d = 64;
  std::size_t layers = 2;
  std::size_t heads = 8;
  std::size_t t_max = 20;
  std::size_t window = 10;
  double dropout = 0.1;

  void validate() const;
};

struct SequenceBackbone {
  Parameter item_embedding;      // [(num_items + 1) x d], row 0 pinned to zero
  Parameter behavior_embedding;  // [3 x d]
  nn::GruCell state_encoder;
  Parameter position_embedding;  // [t_max x d]
  std::vector<nn::TransformerBlock> blocks;
  nn::LayerNorm final_norm;

  SequenceBackbone() = default;
  SequenceBackbone(const std::string& prefix, const BackboneConfig& cfg, Rng& rng);

  std::size_t width() const { return item_embedding.value.cols(); }

  // GRU over each window from a zero hidden state; one output row per window.
  ad::Var encode_states(ad::Tape& tape, std::span<const StateWindow* const> windows) const;

  // Transformer stack plus final normalisation over packed segments.
  ad::Var transform(ad::Tape& tape, const ad::Var& tokens,
                    std::span<const std::size_t> segment_lengths,
                    const nn::BlockOptions& opts) const;

  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;
};

// Tokens for a batch of trajectories packed into one matrix.
struct TokenBatch {
  ad::Var tokens;
  std::vector<std::size_t> segment_lengths;
  // Packed row of each step's readout token (state token for the
  // recommender, action token for the simulator), in step order.
  std::vector<std::size_t> readout_rows;
  // Trajectory index and step index of each readout row.
  std::vector<std::size_t> step_trajectory;
  std::vector<std::size_t> step_index;
};

}  // namespace exposurerec
