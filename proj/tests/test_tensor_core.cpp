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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "exposurerec/autodiff.hpp"
#include "exposurerec/errors.hpp"
#include "exposurerec/nn.hpp"
#include "op_cases.hpp"
#include "test_support.hpp"

namespace {

namespace er = exposurerec;
namespace ad = exposurerec::ad;
using er::NdArray;
using er::Parameter;
using exrec_test::random_param;

NdArray eval1(const std::function<ad::Var(ad::Tape&)>& f) {
  ad::Tape tape(false);
  return f(tape).value();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------- matmul

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  ad::Tape t(false);
  auto out = ad::matmul(t.constant(NdArray::matrix({{1, 0}, {0, 1}})),
                        t.constant(NdArray::matrix({{1, 2}, {3, 4}})));
  EXPECT_EQ(out.value(), NdArray::matrix({{1, 2}, {3, 4}}));
}

TEST(Matmul, RowTimesColumn) {
  ad::Tape t(false);
  auto out = ad::matmul(t.constant(NdArray::matrix({{1, 0}})),
                        t.constant(NdArray::matrix({{0}, {5}})));
  ASSERT_EQ(out.value().shape(), (er::Shape{1, 1}));
  EXPECT_EQ(out.value()[0], 0.0);
}

TEST(Matmul, MatchesTripleLoop) {
  er::Rng rng(3);
  NdArray a = exrec_test::random_array({3, 4}, rng);
  NdArray b = exrec_test::random_array({4, 2}, rng);
  ad::Tape t(false);
  NdArray out = ad::matmul(t.constant(a), t.constant(b)).value();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(out.at(i, j), s, 1e-12);
    }
  }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  ad::Tape t(false);
  try {
    ad::matmul(t.constant(NdArray({2, 3})), t.constant(NdArray({2, 3})));
    FAIL() << "expected DimensionError";
  } catch (const er::DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
  }
}

// ---------------------------------------------------------------- softmax

TEST(Softmax, SymmetricInput) {
  NdArray out = eval1([](ad::Tape& t) { return ad::softmax(t.constant(NdArray::vector({0, 0}))); });
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 0.5);
}

TEST(Softmax, LargeEqualLogitsDoNotOverflow) {
  NdArray out = eval1(
      [](ad::Tape& t) { return ad::softmax(t.constant(NdArray::vector({1000, 1000, 1000}))); });
  for (double v : out.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, HandEvaluatedQuarterThreeQuarters) {
  NdArray out = eval1(
      [](ad::Tape& t) { return ad::softmax(t.constant(NdArray::vector({0, std::log(3.0)}))); });
  EXPECT_NEAR(out[0], 0.25, 1e-15);
  EXPECT_NEAR(out[1], 0.75, 1e-15);
}

TEST(Softmax, EmptyInputIsDomainError) {
  ad::Tape t(false);
  EXPECT_THROW(ad::softmax(t.constant(NdArray({0}))), er::DomainError);
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    er::Rng rng(seed);
    NdArray x = exrec_test::random_array({3, 7}, rng, 5.0);
    const double c = rng.normal(0.0, 50.0);
    NdArray shifted = x;
    for (auto& v : shifted.values()) v += c;
    NdArray a = eval1([&](ad::Tape& t) { return ad::softmax(t.constant(x)); });
    NdArray b = eval1([&](ad::Tape& t) { return ad::softmax(t.constant(shifted)); });
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (double v : a.row(r)) {
        EXPECT_GT(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    EXPECT_LE(er::max_abs_diff(a, b), 1e-12) << "seed " << seed;
  }
}

// ---------------------------------------------------------------- gelu

// x * Phi(x) with Phi(x) = 1/2 + integral_0^x of the standard normal density,
// integrated with composite Simpson.
double gelu_quadrature(double x) {
  const int n = 4000;
  const double h = x / n;
  auto pdf = [](double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); };
  double s = pdf(0.0) + pdf(x);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
  return x * (0.5 + s * h / 3.0);
}

TEST(Gelu, ZeroAndAsymptotes) {
  NdArray out = eval1(
      [](ad::Tape& t) { return ad::gelu(t.constant(NdArray::vector({0.0, 30.0, -30.0}))); });
  EXPECT_EQ(out[0], 0.0);
  EXPECT_NEAR(out[1], 30.0, 1e-12);
  EXPECT_NEAR(out[2], 0.0, 1e-12);
}

TEST(Gelu, MatchesQuadratureOracle) {
  for (double x : {1.0, -0.7, 2.3}) {
    NdArray out = eval1([&](ad::Tape& t) { return ad::gelu(t.constant(NdArray::vector({x}))); });
    EXPECT_NEAR(out[0], gelu_quadrature(x), 1e-10) << x;
  }
}

// ---------------------------------------------------------------- layer_norm

NdArray layer_norm_of(const NdArray& x, const NdArray& gain, const NdArray& bias) {
  return eval1([&](ad::Tape& t) {
    return ad::layer_norm(t.constant(x), t.constant(gain), t.constant(bias));
  });
}

TEST(LayerNorm, ConstantVectorMapsToZero) {
  NdArray out = layer_norm_of(NdArray::vector({4, 4, 4}), NdArray::vector({1, 1, 1}),
                              NdArray::vector({0, 0, 0}));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, UnitVarianceInput) {
  NdArray out =
      layer_norm_of(NdArray::vector({1, -1}), NdArray::vector({1, 1}), NdArray::vector({0, 0}));
  const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(out[0], expected, 1e-15);
  EXPECT_NEAR(out[1], -expected, 1e-15);
  EXPECT_NEAR(out[0], 1.0, 1e-5);
}

TEST(LayerNorm, ZeroGainYieldsBias) {
  NdArray out = layer_norm_of(NdArray::vector({3, -2, 7}), NdArray::vector({0, 0, 0}),
                              NdArray::vector({0.5, -1, 2}));
  EXPECT_EQ(out, NdArray::vector({0.5, -1, 2}));
}

// ---------------------------------------------------------------- gru_cell

er::nn::GruCell zero_gru(std::size_t in, std::size_t d) {
  er::Rng rng(0);
  er::nn::GruCell cell("gru", in, d, rng);
  std::vector<Parameter*> ps;
  cell.collect(ps);
  for (auto* p : ps) p->value.fill(0.0);
  return cell;
}

TEST(GruCell, ZeroWeightsHalveHiddenState) {
  auto cell = zero_gru(3, 4);
  NdArray h_prev = NdArray::matrix({{0.2, -0.6, 0.9, -0.1}});
  NdArray out = eval1([&](ad::Tape& t) {
    return er::nn::gru_cell(t, t.constant(NdArray::matrix({{1, 2, 3}})), t.constant(h_prev), cell);
  });
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(out[i], 0.5 * h_prev[i]);
}

TEST(GruCell, ZeroInputZeroStateStaysZero) {
  er::Rng rng(5);
  er::nn::GruCell cell("gru", 3, 4, rng);
  NdArray out = eval1([&](ad::Tape& t) {
    return er::nn::gru_cell(t, t.constant(NdArray({1, 3})), t.constant(NdArray({1, 4})), cell);
  });
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(GruCell, WidthMismatchIsDimensionError) {
  er::Rng rng(5);
  er::nn::GruCell cell("gru", 3, 4, rng);
  ad::Tape t(false);
  EXPECT_THROW(er::nn::gru_cell(t, t.constant(NdArray({1, 2})), t.constant(NdArray({1, 4})), cell),
               er::DimensionError);
  EXPECT_THROW(er::nn::gru_cell(t, t.constant(NdArray({1, 3})), t.constant(NdArray({1, 5})), cell),
               er::DimensionError);
}

std::vector<double> gru_scalar_oracle(const er::nn::GruCell& c, const std::vector<double>& x,
                                      const std::vector<double>& h) {
  const std::size_t d = h.size(), in = x.size();
  auto affine = [&](const Parameter& w, const Parameter& u, const Parameter& b,
                    const std::vector<double>& hh, std::size_t j) {
    double s = b.value[j];
    for (std::size_t k = 0; k < in; ++k) s += w.value.at(j, k) * x[k];
    for (std::size_t k = 0; k < d; ++k) s += u.value.at(j, k) * hh[k];
    return s;
  };
  std::vector<double> r(d), z(d), rh(d), out(d);
  for (std::size_t j = 0; j < d; ++j) {
    r[j] = sigmoid(affine(c.w_r, c.u_r, c.b_r, h, j));
    z[j] = sigmoid(affine(c.w_z, c.u_z, c.b_z, h, j));
  }
  for (std::size_t j = 0; j < d; ++j) rh[j] = r[j] * h[j];
  for (std::size_t j = 0; j < d; ++j) {
    const double cand = std::tanh(affine(c.w_h, c.u_h, c.b_h, rh, j));
    out[j] = (1.0 - z[j]) * h[j] + z[j] * cand;
  }
  return out;
}

TEST(GruCell, MatchesScalarOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    er::Rng rng(seed);
    er::nn::GruCell cell("gru", 3, 5, rng);
    std::vector<Parameter*> ps;
    cell.collect(ps);
    exrec_test::randomize(ps, rng, 0.5);
    std::vector<double> x(3), h(5);
    for (auto& v : x) v = rng.normal();
    for (auto& v : h) v = std::tanh(rng.normal());
    NdArray out = eval1([&](ad::Tape& t) {
      return er::nn::gru_cell(t, t.constant(NdArray({1, 3}, x)), t.constant(NdArray({1, 5}, h)),
                              cell);
    });
    auto expected = gru_scalar_oracle(cell, x, h);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_NEAR(out[j], expected[j], 1e-12);
      EXPECT_GT(out[j], -1.0);
      EXPECT_LT(out[j], 1.0);
    }
  }
}

// ---------------------------------------------------------------- attention

er::nn::CausalSelfAttention random_attention(std::size_t d, std::size_t heads, er::Rng& rng) {
  er::nn::CausalSelfAttention attn("attn", d, heads, rng);
  std::vector<Parameter*> ps;
  attn.collect(ps);
  exrec_test::randomize(ps, rng, 0.5);
  return attn;
}

NdArray attend(const er::nn::CausalSelfAttention& attn, const NdArray& tokens) {
  const std::size_t seg[] = {tokens.rows()};
  return eval1([&](ad::Tape& t) { return er::nn::causal_attention(t, t.constant(tokens), attn, seg); });
}

std::vector<double> affine(const Parameter& w, const Parameter& b, std::span<const double> x) {
  std::vector<double> out(w.value.rows());
  for (std::size_t j = 0; j < out.size(); ++j) {
    double s = b.value[j];
    for (std::size_t k = 0; k < x.size(); ++k) s += w.value.at(j, k) * x[k];
    out[j] = s;
  }
  return out;
}

TEST(CausalAttention, SingleTokenIsLinearMap) {
  er::Rng rng(11);
  auto attn = random_attention(4, 2, rng);
  NdArray x = exrec_test::random_array({1, 4}, rng);
  NdArray out = attend(attn, x);
  auto v = affine(attn.value.weight, attn.value.bias, x.row(0));
  auto expected = affine(attn.output.weight, attn.output.bias, v);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out[j], expected[j], 1e-12);
}

TEST(CausalAttention, TwoPositionSingleHeadOracle) {
  er::Rng rng(12);
  const std::size_t d = 3;
  auto attn = random_attention(d, 1, rng);
  NdArray x = exrec_test::random_array({2, d}, rng);
  NdArray out = attend(attn, x);
  std::vector<std::vector<double>> q, k, v;
  for (std::size_t i = 0; i < 2; ++i) {
    q.push_back(affine(attn.query.weight, attn.query.bias, x.row(i)));
    k.push_back(affine(attn.key.weight, attn.key.bias, x.row(i)));
    v.push_back(affine(attn.value.weight, attn.value.bias, x.row(i)));
  }
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  const double sc = 1.0 / std::sqrt(static_cast<double>(d));
  const double s0 = dot(q[1], k[0]) * sc, s1 = dot(q[1], k[1]) * sc;
  const double p0 = 1.0 / (1.0 + std::exp(s1 - s0)), p1 = 1.0 - p0;
  std::vector<double> mixed(d);
  for (std::size_t c = 0; c < d; ++c) mixed[c] = p0 * v[0][c] + p1 * v[1][c];
  auto first = affine(attn.output.weight, attn.output.bias, v[0]);
  auto second = affine(attn.output.weight, attn.output.bias, mixed);
  for (std::size_t c = 0; c < d; ++c) {
    EXPECT_NEAR(out.at(0, c), first[c], 1e-12);
    EXPECT_NEAR(out.at(1, c), second[c], 1e-12);
  }
}

TEST(CausalAttention, LaterTokensDoNotAffectEarlierOutputs) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    er::Rng rng(seed);
    auto attn = random_attention(8, 2, rng);
    const std::size_t T = 6;
    NdArray x = exrec_test::random_array({T, 8}, rng);
    const std::size_t t = static_cast<std::size_t>(rng.uniform_int(0, T - 2));
    NdArray y = x;
    for (std::size_t r = t + 1; r < T; ++r) {
      for (auto& v : y.row(r)) v += rng.normal(0.0, 3.0);
    }
    NdArray a = attend(attn, x), b = attend(attn, y);
    for (std::size_t r = 0; r <= t; ++r) {
      for (std::size_t c = 0; c < 8; ++c) ASSERT_EQ(a.at(r, c), b.at(r, c)) << "seed " << seed;
    }
  }
}

TEST(CausalAttention, WidthNotDivisibleByHeadsIsConfigError) {
  ad::Tape t(false);
  NdArray x({2, 6});
  const std::size_t seg[] = {2};
  EXPECT_THROW(ad::causal_attention_core(t.constant(x), t.constant(x), t.constant(x), 4, seg),
               er::ConfigError);
}

// ---------------------------------------------------------------- losses

TEST(CrossEntropy, UniformLogitsGiveLogN) {
  for (std::size_t n : {2u, 7u, 50u}) {
    NdArray out =
        eval1([&](ad::Tape& t) { return ad::cross_entropy(t.constant(NdArray({1, n}, 0.37)), 1); });
    EXPECT_NEAR(out[0], std::log(static_cast<double>(n)), 1e-12);
  }
}

TEST(CrossEntropy, ConfidentCorrectLogit) {
  NdArray out = eval1(
      [](ad::Tape& t) { return ad::cross_entropy(t.constant(NdArray::matrix({{10, -10}})), 0); });
  // log(1 + e^-20)
  EXPECT_NEAR(out[0], std::log1p(std::exp(-20.0)), 1e-15);
  EXPECT_NEAR(out[0], 2.06e-9, 0.01e-9);
}

TEST(CrossEntropy, OutOfRangeTargetIsDomainError) {
  ad::Tape t(false);
  EXPECT_THROW(ad::cross_entropy(t.constant(NdArray({1, 3})), 3), er::DomainError);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  er::Rng rng(21);
  Parameter logits = random_param("logits", {1, 6}, rng, 2.0);
  auto res = exrec_test::check_gradients(
      [&](ad::Tape& t) { return ad::cross_entropy(t.param(logits), 4); }, {&logits}, rng, 64);
  EXPECT_LT(res.worst_relative, 1e-6);
}

TEST(CrossEntropy, MaskedRowsDoNotChangeMean) {
  er::Rng rng(22);
  NdArray a = exrec_test::random_array({2, 5}, rng);
  NdArray b({4, 5});
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 5; ++c) b.at(r, c) = a.at(r, c);
  }
  for (std::size_t c = 0; c < 5; ++c) b.at(2, c) = b.at(3, c) = rng.normal();
  const std::int64_t ta[] = {1, 3};
  const std::int64_t tb[] = {1, 3, -1, -1};
  NdArray la = eval1([&](ad::Tape& t) { return ad::cross_entropy(t.constant(a), ta); });
  NdArray lb = eval1([&](ad::Tape& t) { return ad::cross_entropy(t.constant(b), tb); });
  EXPECT_NEAR(la[0], lb[0], 1e-12);
}

TEST(CrossEntropy, AllRowsMaskedIsUsageError) {
  ad::Tape t(false);
  const std::int64_t targets[] = {-1, -1};
  EXPECT_THROW(ad::cross_entropy(t.constant(NdArray({2, 3})), targets), er::UsageError);
}

TEST(BinaryCrossEntropy, ZeroLogitGivesLn2) {
  for (int y : {0, 1}) {
    NdArray out =
        eval1([&](ad::Tape& t) { return ad::binary_cross_entropy(t.constant(NdArray::vector({0})), y); });
    EXPECT_NEAR(out[0], std::log(2.0), 1e-15);
  }
}

TEST(BinaryCrossEntropy, SaturatedLogits) {
  NdArray pos = eval1(
      [](ad::Tape& t) { return ad::binary_cross_entropy(t.constant(NdArray::vector({20})), 1); });
  NdArray neg = eval1(
      [](ad::Tape& t) { return ad::binary_cross_entropy(t.constant(NdArray::vector({20})), 0); });
  EXPECT_NEAR(pos[0], 2.061e-9, 0.001e-9);
  EXPECT_NEAR(neg[0], 20.0 + std::log1p(std::exp(-20.0)), 1e-12);
  NdArray far = eval1(
      [](ad::Tape& t) { return ad::binary_cross_entropy(t.constant(NdArray::vector({-800})), 1); });
  EXPECT_NEAR(far[0], 800.0, 1e-9);
}

// ---------------------------------------------------------------- backward

TEST(Backward, ProductRule) {
  Parameter x{"x", NdArray::vector({3}), {}};
  Parameter y{"y", NdArray::vector({4}), {}};
  ad::Tape t;
  t.backward(ad::mul(t.param(x), t.param(y)));
  EXPECT_EQ(t.grad(x)[0], 4.0);
  EXPECT_EQ(t.grad(y)[0], 3.0);
}

TEST(Backward, ConstantLossGivesZeroGradient) {
  Parameter x{"x", NdArray::vector({3}), {}};
  ad::Tape t;
  (void)t.param(x);
  t.backward(t.constant(NdArray::vector({5})));
  EXPECT_EQ(t.grad(x)[0], 0.0);
}

TEST(Backward, UnusedParameterGetsZeroGradient) {
  Parameter x{"x", NdArray::vector({1, 2}), {}};
  Parameter unused{"u", NdArray::vector({7, 8, 9}), {}};
  ad::Tape t;
  (void)t.param(unused);
  t.backward(ad::sum(t.param(x)));
  EXPECT_EQ(t.grad(unused), NdArray({3}, 0.0));
}

TEST(Backward, DetachedValueIsUsageError) {
  ad::Tape eval_only(false);
  EXPECT_THROW(eval_only.backward(eval_only.constant(NdArray::vector({1}))), er::UsageError);
  ad::Tape a, b;
  ad::Var other = b.constant(NdArray::vector({1}));
  EXPECT_THROW(a.backward(other), er::UsageError);
}

TEST(Backward, NonScalarLossIsDimensionError) {
  ad::Tape t;
  EXPECT_THROW(t.backward(t.constant(NdArray::vector({1, 2}))), er::DimensionError);
}

// ---------------------------------------------------------------- adam

TEST(Adam, ZeroGradientLeavesParametersAndCountsStep) {
  Parameter p{"p", NdArray::vector({1.5, -2.0}), {}};
  auto state = er::nn::make_adam(0.1);
  Parameter* ps[] = {&p};
  NdArray g[] = {NdArray({2}, 0.0)};
  er::nn::adam_update(ps, g, state);
  EXPECT_EQ(p.value, NdArray::vector({1.5, -2.0}));
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  Parameter p{"p", NdArray::vector({1.0, 1.0, 1.0}), {}};
  auto state = er::nn::make_adam(0.01);
  Parameter* ps[] = {&p};
  NdArray g[] = {NdArray::vector({0.3, -7.0, 1e-3})};
  er::nn::adam_update(ps, g, state);
  EXPECT_NEAR(p.value[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value[1], 1.0 + 0.01, 1e-9);
  EXPECT_NEAR(p.value[2], 1.0 - 0.01, 1e-6);
}

TEST(Adam, TwoStepsMatchScalarReference) {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Parameter p{"p", NdArray::vector({0.7, -0.2}), {}};
  auto state = er::nn::make_adam(lr);
  Parameter* ps[] = {&p};
  const double grads[2][2] = {{0.4, -1.1}, {0.4, -1.1}};
  double w[2] = {0.7, -0.2}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int step = 1; step <= 2; ++step) {
    NdArray g[] = {NdArray::vector({grads[step - 1][0], grads[step - 1][1]})};
    er::nn::adam_update(ps, g, state);
    for (int j = 0; j < 2; ++j) {
      m[j] = b1 * m[j] + (1 - b1) * grads[step - 1][j];
      v[j] = b2 * v[j] + (1 - b2) * grads[step - 1][j] * grads[step - 1][j];
      const double mh = m[j] / (1 - std::pow(b1, step));
      const double vh = v[j] / (1 - std::pow(b2, step));
      w[j] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
  EXPECT_NEAR(p.value[0], w[0], 1e-12);
  EXPECT_NEAR(p.value[1], w[1], 1e-12);
  EXPECT_EQ(state.step, 2u);
}

TEST(Adam, ShapeMismatchIsDimensionError) {
  Parameter p{"p", NdArray::vector({1, 2}), {}};
  auto state = er::nn::make_adam(0.1);
  Parameter* ps[] = {&p};
  NdArray g[] = {NdArray({3}, 0.0)};
  EXPECT_THROW(er::nn::adam_update(ps, g, state), er::DimensionError);
}

TEST(Adam, PinnedRowsStayZero) {
  Parameter p{"emb", NdArray({3, 2}, 0.0), {0}};
  auto state = er::nn::make_adam(0.1);
  Parameter* ps[] = {&p};
  NdArray g[] = {NdArray({3, 2}, 1.0)};
  er::nn::adam_update(ps, g, state);
  EXPECT_EQ(p.value.at(0, 0), 0.0);
  EXPECT_EQ(p.value.at(0, 1), 0.0);
  EXPECT_NE(p.value.at(1, 0), 0.0);
}

// ---------------------------------------------------------------- dropout

TEST(Dropout, EvaluationModeIsIdentity) {
  er::Rng rng(1);
  NdArray x = exrec_test::random_array({4, 4}, rng);
  NdArray out = eval1([&](ad::Tape& t) { return ad::dropout(t.constant(x), 0.5, false, &rng); });
  EXPECT_EQ(out, x);
}

TEST(Dropout, RetainedFractionMatchesRate) {
  for (double p : {0.1, 0.3, 0.5}) {
    er::Rng rng(7);
    NdArray x({100000}, 1.0);
    NdArray out = eval1([&](ad::Tape& t) { return ad::dropout(t.constant(x), p, true, &rng); });
    std::size_t kept = 0;
    for (double v : out.values()) {
      if (v != 0.0) {
        ++kept;
        EXPECT_DOUBLE_EQ(v, 1.0 / (1.0 - p));
      }
    }
    EXPECT_NEAR(static_cast<double>(kept) / 100000.0, 1.0 - p, 0.01) << p;
  }
}

// ---------------------------------------------------------------- gradients

TEST(GradientCheck, EveryPrimitiveMatchesCentralDifferences) {
  for (const auto& op : exrec_test::op_cases()) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      er::Rng rng(seed * 7919 + 1);
      auto params = op.make(rng);
      // A fixed random weighting turns any output into a scalar loss.
      NdArray weights;
      {
        ad::Tape probe(false);
        weights = exrec_test::random_array(op.build(probe, params).value().shape(), rng);
      }
      std::vector<Parameter*> ptrs;
      for (auto& p : params) ptrs.push_back(&p);
      auto res = exrec_test::check_gradients(
          [&](ad::Tape& t) {
            ad::Var out = op.build(t, params);
            if (out.value().size() == 1) return out;
            return ad::sum(ad::mul(out, t.constant(weights)));
          },
          ptrs, rng, 64);
      worst = std::max(worst, res.worst_relative);
    }
    EXPECT_LT(worst, 1e-4) << op.name;
  }
}

TEST(GradientCheck, GruCellMatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    er::Rng rng(seed);
    er::nn::GruCell cell("gru", 3, 4, rng);
    std::vector<Parameter*> ps;
    cell.collect(ps);
    exrec_test::randomize(ps, rng, 0.5);
    Parameter x = random_param("x", {2, 3}, rng);
    Parameter h = random_param("h", {2, 4}, rng, 0.5);
    NdArray weights = exrec_test::random_array({2, 4}, rng);
    ps.push_back(&x);
    ps.push_back(&h);
    auto res = exrec_test::check_gradients(
        [&](ad::Tape& t) {
          return ad::sum(
              ad::mul(er::nn::gru_cell(t, t.param(x), t.param(h), cell), t.constant(weights)));
        },
        ps, rng, 64);
    ASSERT_LT(res.worst_relative, 1e-4) << "seed " << seed << " " << res.worst_parameter;
  }
}

TEST(GradientCheck, TransformerBlockMatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    er::Rng rng(seed);
    er::nn::TransformerBlock block("block", 4, 2, rng);
    std::vector<Parameter*> ps;
    block.collect(ps);
    exrec_test::randomize(ps, rng, 0.4);
    Parameter x = random_param("x", {5, 4}, rng);
    NdArray weights = exrec_test::random_array({5, 4}, rng);
    ps.push_back(&x);
    const std::size_t seg[] = {3, 2};
    auto res = exrec_test::check_gradients(
        [&](ad::Tape& t) {
          return ad::sum(ad::mul(block(t, t.param(x), seg, {}), t.constant(weights)));
        },
        ps, rng, 32);
    ASSERT_LT(res.worst_relative, 1e-4) << "seed " << seed << " " << res.worst_parameter;
  }
}

}  // namespace
