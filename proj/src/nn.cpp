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

#include "exposurerec/nn.hpp"

#include <cmath>

#include "exposurerec/errors.hpp"

namespace exposurerec::nn {

Parameter make_param(std::string name, Shape shape, Rng* rng, double stddev) {
  Parameter p{std::move(name), NdArray(std::move(shape), 0.0), {}};
  if (rng && stddev > 0.0) {
    for (auto& v : p.value.values()) v = rng->normal(0.0, stddev);
  }
  return p;
}

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng,
               bool zero_weight)
    : weight(make_param(name + ".weight", {out, in}, zero_weight ? nullptr : &rng)),
      bias(make_param(name + ".bias", {out}, nullptr)) {}

Var Linear::operator()(Tape& tape, const Var& x) const {
  return ad::linear(x, tape.param(weight), tape.param(bias));
}

void Linear::collect(std::vector<Parameter*>& out) { out.insert(out.end(), {&weight, &bias}); }
void Linear::collect(std::vector<const Parameter*>& out) const {
  out.insert(out.end(), {&weight, &bias});
}

LayerNorm::LayerNorm(const std::string& name, std::size_t d)
    : gain{name + ".gain", NdArray({d}, 1.0), {}}, bias{name + ".bias", NdArray({d}, 0.0), {}} {}

Var LayerNorm::operator()(Tape& tape, const Var& x) const {
  return ad::layer_norm(x, tape.param(gain), tape.param(bias));
}

void LayerNorm::collect(std::vector<Parameter*>& out) { out.insert(out.end(), {&gain, &bias}); }
void LayerNorm::collect(std::vector<const Parameter*>& out) const {
  out.insert(out.end(), {&gain, &bias});
}

GruCell::GruCell(const std::string& name, std::size_t in, std::size_t d, Rng& rng)
    : w_r(make_param(name + ".w_r", {d, in}, &rng)),
      w_z(make_param(name + ".w_z", {d, in}, &rng)),
      w_h(make_param(name + ".w_h", {d, in}, &rng)),
      u_r(make_param(name + ".u_r", {d, d}, &rng)),
      u_z(make_param(name + ".u_z", {d, d}, &rng)),
      u_h(make_param(name + ".u_h", {d, d}, &rng)),
      b_r(make_param(name + ".b_r", {d}, nullptr)),
      b_z(make_param(name + ".b_z", {d}, nullptr)),
      b_h(make_param(name + ".b_h", {d}, nullptr)) {}

void GruCell::collect(std::vector<Parameter*>& out) {
  out.insert(out.end(), {&w_r, &w_z, &w_h, &u_r, &u_z, &u_h, &b_r, &b_z, &b_h});
}
void GruCell::collect(std::vector<const Parameter*>& out) const {
  out.insert(out.end(), {&w_r, &w_z, &w_h, &u_r, &u_z, &u_h, &b_r, &b_z, &b_h});
}

Var gru_cell(Tape& tape, const Var& x, const Var& h, const GruCell& cell) {
  const NdArray& xv = x.value();
  const NdArray& hv = h.value();
  if (xv.cols() != cell.input_width() || hv.cols() != cell.width() || xv.rows() != hv.rows()) {
    throw DimensionError("gru_cell: input " + shape_str(xv.shape()) + ", hidden " +
                         shape_str(hv.shape()) + ", cell " + std::to_string(cell.input_width()) +
                         "->" + std::to_string(cell.width()));
  }
  Var r = ad::sigmoid(ad::add(ad::linear(x, tape.param(cell.w_r), tape.param(cell.b_r)),
                              ad::linear(h, tape.param(cell.u_r))));
  Var z = ad::sigmoid(ad::add(ad::linear(x, tape.param(cell.w_z), tape.param(cell.b_z)),
                              ad::linear(h, tape.param(cell.u_z))));
  Var c = ad::tanh(ad::add(ad::linear(x, tape.param(cell.w_h), tape.param(cell.b_h)),
                           ad::linear(ad::mul(r, h), tape.param(cell.u_h))));
  return ad::add(h, ad::mul(z, ad::sub(c, h)));
}

CausalSelfAttention::CausalSelfAttention(const std::string& name, std::size_t d,
                                         std::size_t heads_, Rng& rng)
    : query(name + ".query", d, d, rng),
      key(name + ".key", d, d, rng),
      value(name + ".value", d, d, rng),
      output(name + ".output", d, d, rng),
      heads(heads_) {
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

void CausalSelfAttention::collect(std::vector<Parameter*>& out) {
  query.collect(out);
  key.collect(out);
  value.collect(out);
  output.collect(out);
}
void CausalSelfAttention::collect(std::vector<const Parameter*>& out) const {
  query.collect(out);
  key.collect(out);
  value.collect(out);
  output.collect(out);
}

Var causal_attention(Tape& tape, const Var& tokens, const CausalSelfAttention& attn,
                     std::span<const std::size_t> segment_lengths) {
  Var q = attn.query(tape, tokens);
  Var k = attn.key(tape, tokens);
  Var v = attn.value(tape, tokens);
  return attn.output(tape, ad::causal_attention_core(q, k, v, attn.heads, segment_lengths));
}

TransformerBlock::TransformerBlock(const std::string& name, std::size_t d, std::size_t heads,
                                   Rng& rng)
    : ln_attn(name + ".ln_attn", d),
      attn(name + ".attn", d, heads, rng),
      ln_ffn(name + ".ln_ffn", d),
      ffn_in(name + ".ffn_in", d, 4 * d, rng),
      ffn_out(name + ".ffn_out", 4 * d, d, rng) {}

Var TransformerBlock::operator()(Tape& tape, const Var& x,
                                 std::span<const std::size_t> segment_lengths,
                                 const BlockOptions& opts) const {
  Var a = causal_attention(tape, ln_attn(tape, x), attn, segment_lengths);
  Var h = ad::add(x, ad::dropout(a, opts.dropout, opts.training, opts.rng));
  Var f = ffn_out(tape, ad::gelu(ffn_in(tape, ln_ffn(tape, h))));
  return ad::add(h, ad::dropout(f, opts.dropout, opts.training, opts.rng));
}

void TransformerBlock::collect(std::vector<Parameter*>& out) {
  ln_attn.collect(out);
  attn.collect(out);
  ln_ffn.collect(out);
  ffn_in.collect(out);
  ffn_out.collect(out);
}
void TransformerBlock::collect(std::vector<const Parameter*>& out) const {
  ln_attn.collect(out);
  attn.collect(out);
  ln_ffn.collect(out);
  ffn_in.collect(out);
  ffn_out.collect(out);
}

void adam_update(std::span<Parameter* const> params, std::span<const NdArray> grads,
                 AdamState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_update: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.shape(), 0.0);
      state.second_moment.emplace_back(p->value.shape(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_update: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i]->value.shape();
    if (grads[i].shape() != s || state.first_moment[i].shape() != s) {
      throw DimensionError("adam_update: parameter " + params[i]->name + " " + shape_str(s) +
                           " vs gradient " + shape_str(grads[i].shape()));
    }
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    NdArray& w = params[i]->value;
    NdArray& m = state.first_moment[i];
    NdArray& v = state.second_moment[i];
    const NdArray& g = grads[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.eps);
    }
    if (!params[i]->pinned_zero_rows.empty()) {
      const std::size_t cols = w.cols();
      for (std::size_t r : params[i]->pinned_zero_rows) {
        for (std::size_t j = 0; j < cols; ++j) {
          w[r * cols + j] = 0.0;
          m[r * cols + j] = 0.0;
          v[r * cols + j] = 0.0;
        }
      }
    }
  }
}

}  // namespace exposurerec::nn
