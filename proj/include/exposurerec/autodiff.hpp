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

// Reverse-mode differentiation over whole arrays.
//
// A Tape records every primitive applied during a forward pass. Nodes are
// appended in evaluation order, so the append order is already a topological
// order and backward() simply walks it in reverse. Parameters are referenced,
// not copied, and their gradients are read back with Tape::grad() after
// backward(); model parameters are never mutated by a forward pass, which is
// what lets inference run on a const model.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "exposurerec/ndarray.hpp"
#include "exposurerec/rng.hpp"

namespace exposurerec {

// A named trainable array. Rows listed in pinned_zero_rows are held at zero
// by the optimizer (used for the padding row of embedding tables).
struct Parameter {
  std::string name;
  NdArray value;
  std::vector<std::size_t> pinned_zero_rows;
};

namespace ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

  const NdArray& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const NdArray& out_grad)>;

  // With record_gradients=false no adjoint closures are stored; the tape then
  // only evaluates, and backward() is a usage error.
  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(NdArray value);
  // Repeated calls with the same parameter return the same node.
  Var param(const Parameter& p);

  // Seeds d(loss)/d(loss)=1 and replays adjoints in reverse order. The loss
  // must be a single element. May be called once per tape.
  void backward(const Var& loss);

  // Gradient with respect to a parameter; zeros when the parameter never
  // reached the loss.
  NdArray grad(const Parameter& p) const;
  NdArray grad(const Var& v) const;

  // --- interface for op implementations ---
  Var push(NdArray value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var push(NdArray value, std::span<const Var> inputs, BackwardFn fn);
  const NdArray& value(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  // Lazily zero-initialised adjoint buffer of node id.
  NdArray& grad_buffer(std::size_t id);

 private:
  struct Node {
    NdArray value;
    const NdArray* external = nullptr;
    BackwardFn backward;
    bool needs_grad = false;
  };

  bool recording_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::vector<NdArray> grads_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// ---- primitives ----

Var matmul(const Var& a, const Var& b);
// x [N x in] (or [in]) times weight^T with weight [out x in], plus bias [out].
Var linear(const Var& x, const Var& weight, const Var* bias = nullptr);
Var linear(const Var& x, const Var& weight, const Var& bias);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// Adds a row vector [d] to every row of x [N x d].
Var add_row(const Var& x, const Var& row);
Var scale(const Var& x, double s);

Var sigmoid(const Var& x);
Var tanh(const Var& x);
// x * Phi(x) with the exact erf form of the normal CDF.
Var gelu(const Var& x);

// Normalises over the last axis with eps = 1e-5.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
// Row-wise softmax with max subtraction. Empty input is a domain error.
Var softmax(const Var& x);

// Rows of table selected by indices -> [n x d].
Var embedding(const Var& table, std::span<const std::size_t> indices);
Var gather_rows(const Var& x, std::span<const std::size_t> indices);
Var concat_rows(std::span<const Var> parts);

// Multi-head scaled dot-product attention over packed sequences. q, k, v are
// [R x d] where R is the sum of segment_lengths; every segment is its own
// sequence, and position t of a segment attends to positions <= t only.
Var causal_attention_core(const Var& q, const Var& k, const Var& v, std::size_t heads,
                          std::span<const std::size_t> segment_lengths);

// Inverted dropout. Identity when training is false or p == 0.
Var dropout(const Var& x, double p, bool training, Rng* rng);

// Mean over rows of -log softmax(logits)[target]. Negative targets mark rows
// excluded from the mean. Throws DomainError for targets >= cols and
// UsageError if every row is masked.
Var cross_entropy(const Var& logits, std::span<const std::int64_t> targets);
Var cross_entropy(const Var& logits, std::int64_t target);

// Mean over elements of the stabilised logistic loss; labels in {0,1}.
Var binary_cross_entropy(const Var& logits, std::span<const int> labels);
Var binary_cross_entropy(const Var& logit, int label);

Var sum(const Var& x);
Var mean(const Var& x);

}  // namespace ad
}  // namespace exposurerec
