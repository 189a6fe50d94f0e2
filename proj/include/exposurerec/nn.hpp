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
#include <span>
#include <string>
#include <vector>

#include "exposurerec/autodiff.hpp"
#include "exposurerec/rng.hpp"

namespace exposurerec::nn {

using ad::Tape;
using ad::Var;

// Weights are drawn from N(0, 0.02^2) unless stated otherwise; biases start at 0.
constexpr double kInitStddev = 0.02;

Parameter make_param(std::string name, Shape shape, Rng* rng, double stddev = kInitStddev);

struct Linear {
  Parameter weight;  // [out x in]
  Parameter bias;    // [out]

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         bool zero_weight = false);

  Var operator()(Tape& tape, const Var& x) const;
  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;
};

struct LayerNorm {
  Parameter gain;
  Parameter bias;

  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t d);

  Var operator()(Tape& tape, const Var& x) const;
  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;
};

// r = sig(Wr x + Ur h + br), z = sig(Wz x + Uz h + bz),
// c = tanh(Wh x + Uh (r * h) + bh), h' = (1 - z) * h + z * c.
struct GruCell {
  Parameter w_r, w_z, w_h;  // [d x in]
  Parameter u_r, u_z, u_h;  // [d x d]
  Parameter b_r, b_z, b_h;  // [d]

  GruCell() = default;
  GruCell(const std::string& name, std::size_t in, std::size_t d, Rng& rng);

  std::size_t width() const { return b_r.value.size(); }
  std::size_t input_width() const { return w_r.value.cols(); }

  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;
};

// One GRU update on a batch of rows; x [N x in], h [N x d].
Var gru_cell(Tape& tape, const Var& x, const Var& h, const GruCell& cell);

// Projections include biases.
struct CausalSelfAttention {
  Linear query, key, value, output;
  std::size_t heads = 1;

  CausalSelfAttention() = default;
  CausalSelfAttention(const std::string& name, std::size_t d, std::size_t heads, Rng& rng);

  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;
};

// tokens [R x d] packed as consecutive segments; see ad::causal_attention_core.
Var causal_attention(Tape& tape, const Var& tokens, const CausalSelfAttention& attn,
                     std::span<const std::size_t> segment_lengths);

struct BlockOptions {
  double dropout = 0.0;
  bool training = false;
  Rng* rng = nullptr;
};

// Pre-normalisation block: x + drop(attn(ln1(x))), then x + drop(ffn(ln2(x))),
// ffn = linear(4d) -> gelu -> linear(d).
struct TransformerBlock {
  LayerNorm ln_attn;
  CausalSelfAttention attn;
  LayerNorm ln_ffn;
  Linear ffn_in;
  Linear ffn_out;

  TransformerBlock() = default;
  TransformerBlock(const std::string& name, std::size_t d, std::size_t heads, Rng& rng);

  Var operator()(Tape& tape, const Var& x, std::span<const std::size_t> segment_lengths,
                 const BlockOptions& opts) const;
  void collect(std::vector<Parameter*>& out);
  void collect(std::vector<const Parameter*>& out) const;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter moments plus a shared step counter. Moments are sized on the
// first update.
struct AdamState {
  AdamConfig config;
  std::vector<NdArray> first_moment;
  std::vector<NdArray> second_moment;
  std::uint64_t step = 0;
};

inline AdamState make_adam(double learning_rate) {
  AdamState s;
  s.config.learning_rate = learning_rate;
  return s;
}

// Bias-corrected Adam step. Rows in a parameter's pinned_zero_rows stay zero.
void adam_update(std::span<Parameter* const> params, std::span<const NdArray> grads,
                 AdamState& state);

}  // namespace exposurerec::nn
