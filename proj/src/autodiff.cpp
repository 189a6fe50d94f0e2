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

#include "exposurerec/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "exposurerec/errors.hpp"

namespace exposurerec::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

ConstMapMat as_mat(const NdArray& a) {
  return ConstMapMat(a.data(), static_cast<Eigen::Index>(a.rows()),
                     static_cast<Eigen::Index>(a.cols()));
}
MapMat as_mat(NdArray& a) {
  return MapMat(a.data(), static_cast<Eigen::Index>(a.rows()),
                static_cast<Eigen::Index>(a.cols()));
}

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw UsageError("operation on a detached value (no tape)");
  return *v.tape();
}

Tape& common_tape(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (&tape_of(b) != &t) throw UsageError("operands recorded on different tapes");
  return t;
}

void require_matrix(const NdArray& a, const char* op) {
  if (a.rank() != 1 && a.rank() != 2) {
    throw DimensionError(std::string(op) + ": unsupported shape " + shape_str(a.shape()));
  }
}

void require_same_shape(const NdArray& a, const NdArray& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------- Var/Tape

const NdArray& Var::value() const { return tape_of(*this).value(id_); }

Var Tape::constant(NdArray value) {
  nodes_.push_back(Node{std::move(value), nullptr, nullptr, false});
  grads_.emplace_back();
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  nodes_.push_back(Node{NdArray(), &p.value, nullptr, recording_});
  grads_.emplace_back();
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(NdArray value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(fn));
}

Var Tape::push(NdArray value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const auto& in : inputs) {
    if (in.tape() != this) throw UsageError("operand recorded on a different tape");
    needs = needs || nodes_[in.id()].needs_grad;
  }
  needs = needs && recording_ && static_cast<bool>(fn);
  nodes_.push_back(Node{std::move(value), nullptr, needs ? std::move(fn) : nullptr, needs});
  grads_.emplace_back();
  return Var(this, nodes_.size() - 1);
}

const NdArray& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

NdArray& Tape::grad_buffer(std::size_t id) {
  NdArray& g = grads_[id];
  if (g.empty() && value(id).size() != 0) g = NdArray(value(id).shape(), 0.0);
  return g;
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw UsageError("backward on a value from another tape");
  if (!recording_) throw UsageError("backward on a tape that does not record gradients");
  if (backward_done_) throw UsageError("backward already ran on this tape");
  if (value(loss.id()).size() != 1) {
    throw DimensionError("backward requires a scalar loss, got " +
                         shape_str(value(loss.id()).shape()));
  }
  backward_done_ = true;
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || grads_[i].empty()) continue;
    n.backward(*this, grads_[i]);
  }
}

NdArray Tape::grad(const Parameter& p) const {
  auto it = param_nodes_.find(&p);
  if (it == param_nodes_.end() || grads_[it->second].empty()) {
    return NdArray(p.value.shape(), 0.0);
  }
  return grads_[it->second];
}

NdArray Tape::grad(const Var& v) const {
  if (v.tape() != this) throw UsageError("grad of a value from another tape");
  if (grads_[v.id()].empty()) return NdArray(value(v.id()).shape(), 0.0);
  return grads_[v.id()];
}

// ---------------------------------------------------------------- linear algebra

Var matmul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  const NdArray& av = a.value();
  const NdArray& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(av.shape()) + " and " +
                         shape_str(bv.shape()));
  }
  NdArray out({av.rows(), bv.cols()});
  as_mat(out).noalias() = as_mat(av) * as_mat(bv);
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const NdArray& g) {
    if (tp.needs_grad(ia)) {
      as_mat(tp.grad_buffer(ia)).noalias() += as_mat(g) * as_mat(tp.value(ib)).transpose();
    }
    if (tp.needs_grad(ib)) {
      as_mat(tp.grad_buffer(ib)).noalias() += as_mat(tp.value(ia)).transpose() * as_mat(g);
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) { return linear(x, weight, &bias); }

Var linear(const Var& x, const Var& weight, const Var* bias) {
  Tape& t = common_tape(x, weight);
  const NdArray& xv = x.value();
  const NdArray& wv = weight.value();
  require_matrix(xv, "linear");
  if (wv.rank() != 2 || wv.cols() != xv.cols()) {
    throw DimensionError("linear: input " + shape_str(xv.shape()) + " vs weight " +
                         shape_str(wv.shape()));
  }
  const std::size_t out_dim = wv.rows();
  if (bias && bias->value().size() != out_dim) {
    throw DimensionError("linear: bias " + shape_str(bias->value().shape()) +
                         " vs weight " + shape_str(wv.shape()));
  }
  NdArray out(xv.rank() == 1 ? Shape{out_dim} : Shape{xv.rows(), out_dim});
  auto om = as_mat(out);
  om.noalias() = as_mat(xv) * as_mat(wv).transpose();
  if (bias) {
    const NdArray& bv = bias->value();
    Eigen::Map<const Eigen::RowVectorXd> b(bv.data(), static_cast<Eigen::Index>(out_dim));
    om.rowwise() += b;
  }
  const std::size_t ix = x.id(), iw = weight.id();
  const std::size_t ib = bias ? bias->id() : 0;
  const bool has_bias = bias != nullptr;
  if (has_bias) (void)common_tape(x, *bias);
  std::vector<Var> inputs{x, weight};
  if (has_bias) inputs.push_back(*bias);
  return t.push(std::move(out), std::span<const Var>(inputs),
                [ix, iw, ib, has_bias](Tape& tp, const NdArray& g) {
                  auto gm = as_mat(g);
                  if (tp.needs_grad(ix)) {
                    as_mat(tp.grad_buffer(ix)).noalias() += gm * as_mat(tp.value(iw));
                  }
                  if (tp.needs_grad(iw)) {
                    as_mat(tp.grad_buffer(iw)).noalias() +=
                        gm.transpose() * as_mat(tp.value(ix));
                  }
                  if (has_bias && tp.needs_grad(ib)) {
                    NdArray& gb = tp.grad_buffer(ib);
                    Eigen::Map<Eigen::RowVectorXd> b(gb.data(),
                                                     static_cast<Eigen::Index>(gb.size()));
                    b += gm.colwise().sum();
                  }
                });
}

// ---------------------------------------------------------------- elementwise

Var add(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  NdArray out = a.value();
  const NdArray& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const NdArray& g) {
    for (std::size_t id : {ia, ib}) {
      if (!tp.needs_grad(id)) continue;
      NdArray& gb = tp.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  NdArray out = a.value();
  const NdArray& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const NdArray& g) {
    if (tp.needs_grad(ia)) {
      NdArray& ga = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.needs_grad(ib)) {
      NdArray& gb = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  NdArray out = a.value();
  const NdArray& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const NdArray& g) {
    if (tp.needs_grad(ia)) {
      NdArray& ga = tp.grad_buffer(ia);
      const NdArray& bv = tp.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.needs_grad(ib)) {
      NdArray& gb = tp.grad_buffer(ib);
      const NdArray& av = tp.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_row(const Var& x, const Var& row) {
  Tape& t = common_tape(x, row);
  const NdArray& xv = x.value();
  const NdArray& rv = row.value();
  require_matrix(xv, "add_row");
  if (rv.size() != xv.cols()) {
    throw DimensionError("add_row: row " + shape_str(rv.shape()) + " vs input " +
                         shape_str(xv.shape()));
  }
  NdArray out = xv;
  const std::size_t c = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] += rv[j];
  }
  const std::size_t ix = x.id(), ir = row.id();
  return t.push(std::move(out), {x, row}, [ix, ir, c](Tape& tp, const NdArray& g) {
    if (tp.needs_grad(ix)) {
      NdArray& gx = tp.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (tp.needs_grad(ir)) {
      NdArray& gr = tp.grad_buffer(ir);
      for (std::size_t i = 0; i < g.size(); ++i) gr[i % c] += g[i];
    }
  });
}

Var scale(const Var& x, double s) {
  Tape& t = tape_of(x);
  NdArray out = x.value();
  for (auto& v : out.values()) v *= s;
  const std::size_t ix = x.id();
  return t.push(std::move(out), {x}, [ix, s](Tape& tp, const NdArray& g) {
    NdArray& gx = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s;
  });
}

Var sigmoid(const Var& x) {
  Tape& t = tape_of(x);
  const NdArray& xv = x.value();
  NdArray out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = stable_sigmoid(xv[i]);
  const std::size_t ix = x.id();
  const std::size_t self = t.size();
  return t.push(std::move(out), {x}, [ix, self](Tape& tp, const NdArray& g) {
    const NdArray& y = tp.value(self);
    NdArray& gx = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(const Var& x) {
  Tape& t = tape_of(x);
  const NdArray& xv = x.value();
  NdArray out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::tanh(xv[i]);
  const std::size_t ix = x.id();
  const std::size_t self = t.size();
  return t.push(std::move(out), {x}, [ix, self](Tape& tp, const NdArray& g) {
    const NdArray& y = tp.value(self);
    NdArray& gx = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var gelu(const Var& x) {
  Tape& t = tape_of(x);
  const NdArray& xv = x.value();
  NdArray out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * normal_cdf(xv[i]);
  const std::size_t ix = x.id();
  return t.push(std::move(out), {x}, [ix](Tape& tp, const NdArray& g) {
    const NdArray& xv = tp.value(ix);
    NdArray& gx = tp.grad_buffer(ix);
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      gx[i] += g[i] * (normal_cdf(v) + v * kInvSqrt2Pi * std::exp(-0.5 * v * v));
    }
  });
}

// ---------------------------------------------------------------- normalisation

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  Tape& t = common_tape(x, gain);
  (void)common_tape(x, bias);
  const NdArray& xv = x.value();
  require_matrix(xv, "layer_norm");
  const std::size_t d = xv.cols();
  const std::size_t n = xv.rows();
  if (d == 0) throw DimensionError("layer_norm: empty last axis");
  if (gain.value().size() != d || bias.value().size() != d) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.value().shape()) + "/" +
                         shape_str(bias.value().shape()) + " vs input " +
                         shape_str(xv.shape()));
  }
  const NdArray& gv = gain.value();
  const NdArray& bv = bias.value();
  auto xhat = std::make_shared<NdArray>(xv.shape());
  auto inv_std = std::make_shared<std::vector<double>>(n);
  NdArray out(xv.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return t.push(std::move(out), {x, gain, bias},
                [ix, ig, ib, xhat, inv_std, n, d](Tape& tp, const NdArray& g) {
                  const NdArray& gv = tp.value(ig);
                  if (tp.needs_grad(ig)) {
                    NdArray& gg = tp.grad_buffer(ig);
                    for (std::size_t i = 0; i < g.size(); ++i) gg[i % d] += g[i] * (*xhat)[i];
                  }
                  if (tp.needs_grad(ib)) {
                    NdArray& gb = tp.grad_buffer(ib);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
                  }
                  if (tp.needs_grad(ix)) {
                    NdArray& gx = tp.grad_buffer(ix);
                    std::vector<double> dh(d);
                    for (std::size_t r = 0; r < n; ++r) {
                      double m1 = 0.0, m2 = 0.0;
                      for (std::size_t j = 0; j < d; ++j) {
                        dh[j] = g[r * d + j] * gv[j];
                        m1 += dh[j];
                        m2 += dh[j] * (*xhat)[r * d + j];
                      }
                      m1 /= static_cast<double>(d);
                      m2 /= static_cast<double>(d);
                      for (std::size_t j = 0; j < d; ++j) {
                        gx[r * d + j] +=
                            (*inv_std)[r] * (dh[j] - m1 - (*xhat)[r * d + j] * m2);
                      }
                    }
                  }
                });
}

Var softmax(const Var& x) {
  Tape& t = tape_of(x);
  const NdArray& xv = x.value();
  require_matrix(xv, "softmax");
  if (xv.size() == 0) throw DomainError("softmax of an empty input");
  const std::size_t c = xv.cols();
  NdArray out(xv.shape());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const double* in = xv.data() + r * c;
    double* o = out.data() + r * c;
    const double m = *std::max_element(in, in + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (o[j] = std::exp(in[j] - m));
    for (std::size_t j = 0; j < c; ++j) o[j] /= z;
  }
  const std::size_t ix = x.id();
  const std::size_t self = t.size();
  return t.push(std::move(out), {x}, [ix, self, c](Tape& tp, const NdArray& g) {
    const NdArray& y = tp.value(self);
    NdArray& gx = tp.grad_buffer(ix);
    for (std::size_t r = 0; r < y.size() / c; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[r * c + j] * y[r * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += y[r * c + j] * (g[r * c + j] - dot);
    }
  });
}

// ---------------------------------------------------------------- indexing

Var embedding(const Var& table, std::span<const std::size_t> indices) {
  const NdArray& tv = table.value();
  if (tv.rank() != 2) throw DimensionError("embedding: table must be rank 2");
  for (auto i : indices) {
    if (i >= tv.rows()) {
      throw IndexError("embedding index " + std::to_string(i) + " outside table of " +
                       std::to_string(tv.rows()) + " rows");
    }
  }
  return gather_rows(table, indices);
}

Var gather_rows(const Var& x, std::span<const std::size_t> indices) {
  Tape& t = tape_of(x);
  const NdArray& xv = x.value();
  require_matrix(xv, "gather_rows");
  const std::size_t c = xv.cols();
  const std::size_t nrows = xv.rows();
  NdArray out({indices.size(), c});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= nrows) {
      throw IndexError("row index " + std::to_string(indices[r]) + " outside " +
                       std::to_string(nrows) + " rows");
    }
    std::copy_n(xv.data() + indices[r] * c, c, out.data() + r * c);
  }
  const std::size_t ix = x.id();
  auto idx = std::make_shared<std::vector<std::size_t>>(indices.begin(), indices.end());
  return t.push(std::move(out), {x}, [ix, idx, c](Tape& tp, const NdArray& g) {
    NdArray& gx = tp.grad_buffer(ix);
    for (std::size_t r = 0; r < idx->size(); ++r) {
      double* dst = gx.data() + (*idx)[r] * c;
      const double* src = g.data() + r * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  Tape& t = tape_of(parts[0]);
  const std::size_t c = parts[0].value().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (&tape_of(p) != &t) throw UsageError("operands recorded on different tapes");
    require_matrix(p.value(), "concat_rows");
    if (p.value().cols() != c) {
      throw DimensionError("concat_rows: width " + std::to_string(p.value().cols()) +
                           " vs " + std::to_string(c));
    }
    total += p.value().rows();
  }
  NdArray out({total, c});
  std::size_t off = 0;
  auto ids = std::make_shared<std::vector<std::size_t>>();
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + off);
    off += p.value().size();
    ids->push_back(p.id());
  }
  return t.push(std::move(out), parts, [ids](Tape& tp, const NdArray& g) {
    std::size_t off = 0;
    for (auto id : *ids) {
      const std::size_t n = tp.value(id).size();
      if (tp.needs_grad(id)) {
        NdArray& gp = tp.grad_buffer(id);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
      }
      off += n;
    }
  });
}

// ---------------------------------------------------------------- attention

Var causal_attention_core(const Var& q, const Var& k, const Var& v, std::size_t heads,
                          std::span<const std::size_t> segment_lengths) {
  Tape& t = common_tape(q, k);
  (void)common_tape(q, v);
  const NdArray& qv = q.value();
  const NdArray& kv = k.value();
  const NdArray& vv = v.value();
  if (qv.rank() != 2) throw DimensionError("attention: q must be rank 2");
  require_same_shape(qv, kv, "attention");
  require_same_shape(qv, vv, "attention");
  const std::size_t d = qv.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const std::size_t total =
      std::accumulate(segment_lengths.begin(), segment_lengths.end(), std::size_t{0});
  if (total != qv.rows()) {
    throw DimensionError("attention: segments cover " + std::to_string(total) + " rows, input has " +
                         std::to_string(qv.rows()));
  }
  const std::size_t dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  auto segs = std::make_shared<std::vector<std::size_t>>(segment_lengths.begin(),
                                                         segment_lengths.end());
  // Lower-triangular attention weights, per segment and head, row-major packed.
  auto probs = std::make_shared<std::vector<double>>();
  std::size_t prob_size = 0;
  for (auto n : *segs) prob_size += heads * n * (n + 1) / 2;
  probs->resize(prob_size);

  NdArray out({qv.rows(), d}, 0.0);
  std::size_t off = 0;
  std::size_t pbase = 0;
  std::vector<double> scores;
  for (auto n : *segs) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t col = h * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const double* qi = qv.data() + (off + i) * d + col;
        scores.assign(i + 1, 0.0);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j <= i; ++j) {
          const double* kj = kv.data() + (off + j) * d + col;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          scores[j] = s * sc;
          m = std::max(m, scores[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j <= i; ++j) z += (scores[j] = std::exp(scores[j] - m));
        double* p = probs->data() + pbase + i * (i + 1) / 2;
        double* oi = out.data() + (off + i) * d + col;
        for (std::size_t j = 0; j <= i; ++j) {
          p[j] = scores[j] / z;
          const double* vj = vv.data() + (off + j) * d + col;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += p[j] * vj[c];
        }
      }
      pbase += n * (n + 1) / 2;
    }
    off += n;
  }

  const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
  return t.push(std::move(out), {q, k, v},
                [iq, ik, iv, segs, probs, heads, d, dh, sc](Tape& tp, const NdArray& g) {
                  const NdArray& qv = tp.value(iq);
                  const NdArray& kv = tp.value(ik);
                  const NdArray& vv = tp.value(iv);
                  NdArray& gq = tp.grad_buffer(iq);
                  NdArray& gk = tp.grad_buffer(ik);
                  NdArray& gv = tp.grad_buffer(iv);
                  std::vector<double> dp;
                  std::size_t off = 0, pbase = 0;
                  for (auto n : *segs) {
                    for (std::size_t h = 0; h < heads; ++h) {
                      const std::size_t col = h * dh;
                      for (std::size_t i = 0; i < n; ++i) {
                        const double* p = probs->data() + pbase + i * (i + 1) / 2;
                        const double* gi = g.data() + (off + i) * d + col;
                        dp.assign(i + 1, 0.0);
                        double dot = 0.0;
                        for (std::size_t j = 0; j <= i; ++j) {
                          const double* vj = vv.data() + (off + j) * d + col;
                          double* gvj = gv.data() + (off + j) * d + col;
                          double s = 0.0;
                          for (std::size_t c = 0; c < dh; ++c) {
                            s += gi[c] * vj[c];
                            gvj[c] += p[j] * gi[c];
                          }
                          dp[j] = s;
                          dot += s * p[j];
                        }
                        const double* qi = qv.data() + (off + i) * d + col;
                        double* gqi = gq.data() + (off + i) * d + col;
                        for (std::size_t j = 0; j <= i; ++j) {
                          const double ds = p[j] * (dp[j] - dot) * sc;
                          const double* kj = kv.data() + (off + j) * d + col;
                          double* gkj = gk.data() + (off + j) * d + col;
                          for (std::size_t c = 0; c < dh; ++c) {
                            gqi[c] += ds * kj[c];
                            gkj[c] += ds * qi[c];
                          }
                        }
                      }
                      pbase += n * (n + 1) / 2;
                    }
                    off += n;
                  }
                });
}

// ---------------------------------------------------------------- dropout

Var dropout(const Var& x, double p, bool training, Rng* rng) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout rate must be < 1");
  if (!rng) throw UsageError("dropout in training mode needs a generator");
  Tape& t = tape_of(x);
  const NdArray& xv = x.value();
  auto mask = std::make_shared<std::vector<double>>(xv.size());
  const double keep_scale = 1.0 / (1.0 - p);
  NdArray out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    (*mask)[i] = rng->uniform() >= p ? keep_scale : 0.0;
    out[i] = xv[i] * (*mask)[i];
  }
  const std::size_t ix = x.id();
  return t.push(std::move(out), {x}, [ix, mask](Tape& tp, const NdArray& g) {
    NdArray& gx = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
  });
}

// ---------------------------------------------------------------- losses

Var cross_entropy(const Var& logits, std::span<const std::int64_t> targets) {
  Tape& t = tape_of(logits);
  const NdArray& lv = logits.value();
  require_matrix(lv, "cross_entropy");
  const std::size_t n = lv.rows();
  const std::size_t c = lv.cols();
  if (targets.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(n) + " rows");
  }
  if (c == 0) throw DomainError("cross_entropy over zero classes");
  std::size_t count = 0;
  for (auto tgt : targets) {
    if (tgt >= static_cast<std::int64_t>(c)) {
      throw DomainError("cross_entropy target " + std::to_string(tgt) + " outside " +
                        std::to_string(c) + " classes");
    }
    if (tgt >= 0) ++count;
  }
  if (count == 0) throw UsageError("cross_entropy with every row masked");
  auto probs = std::make_shared<NdArray>(Shape{n, c});
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (targets[r] < 0) continue;
    const double* row = lv.data() + r * c;
    double* pr = probs->data() + r * c;
    const double m = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (pr[j] = std::exp(row[j] - m));
    for (std::size_t j = 0; j < c; ++j) pr[j] /= z;
    total += (m + std::log(z)) - row[targets[r]];
  }
  const double inv = 1.0 / static_cast<double>(count);
  auto tg = std::make_shared<std::vector<std::int64_t>>(targets.begin(), targets.end());
  const std::size_t il = logits.id();
  return t.push(NdArray::scalar(total * inv), {logits},
                [il, probs, tg, inv, c](Tape& tp, const NdArray& g) {
                  NdArray& gl = tp.grad_buffer(il);
                  const double s = g[0] * inv;
                  for (std::size_t r = 0; r < tg->size(); ++r) {
                    if ((*tg)[r] < 0) continue;
                    for (std::size_t j = 0; j < c; ++j) gl[r * c + j] += s * (*probs)[r * c + j];
                    gl[r * c + static_cast<std::size_t>((*tg)[r])] -= s;
                  }
                });
}

Var cross_entropy(const Var& logits, std::int64_t target) {
  if (target < 0) throw DomainError("cross_entropy target must be non-negative");
  const std::int64_t tg[1] = {target};
  const NdArray& lv = logits.value();
  if (lv.rank() == 1) {
    return cross_entropy(gather_rows(logits, std::vector<std::size_t>{0}), tg);
  }
  return cross_entropy(logits, tg);
}

Var binary_cross_entropy(const Var& logits, std::span<const int> labels) {
  Tape& t = tape_of(logits);
  const NdArray& lv = logits.value();
  if (labels.size() != lv.size()) {
    throw DimensionError("binary_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(lv.size()) + " logits");
  }
  if (lv.size() == 0) throw UsageError("binary_cross_entropy of an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DomainError("label must be 0 or 1");
    const double z = lv[i];
    total += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  const double inv = 1.0 / static_cast<double>(lv.size());
  auto lb = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  const std::size_t il = logits.id();
  return t.push(NdArray::scalar(total * inv), {logits}, [il, lb, inv](Tape& tp, const NdArray& g) {
    const NdArray& lv = tp.value(il);
    NdArray& gl = tp.grad_buffer(il);
    for (std::size_t i = 0; i < lv.size(); ++i) {
      gl[i] += g[0] * inv * (stable_sigmoid(lv[i]) - (*lb)[i]);
    }
  });
}

Var binary_cross_entropy(const Var& logit, int label) {
  const int lb[1] = {label};
  return binary_cross_entropy(logit, lb);
}

Var sum(const Var& x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t ix = x.id();
  return t.push(NdArray::scalar(s), {x}, [ix](Tape& tp, const NdArray& g) {
    NdArray& gx = tp.grad_buffer(ix);
    for (auto& v : gx.values()) v += g[0];
  });
}

Var mean(const Var& x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw DomainError("mean of an empty array");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

}  // namespace exposurerec::ad
