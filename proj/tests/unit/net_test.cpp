// Copyright 2026 The UberNet Authors
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
#include <limits>
#include <numeric>
#include <random>

#include "ubernet/error.hpp"
#include "ubernet/net.hpp"

namespace ubernet {
namespace {

NetworkConfig small_config(std::size_t k = 4) {
  NetworkConfig cfg;
  cfg.inputs = {{"p", FeatureKind::Continuous, 0},
                {"g", FeatureKind::Continuous, 0},
                {"hour", FeatureKind::Categorical, 24}};
  cfg.lookback = 16;
  cfg.channels = k;
  cfg.column_width = 3;
  cfg.dilations = {1, 2};
  return cfg;
}

Array2D random_window(const NetworkConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Array2D w(cfg.lookback + 1, cfg.inputs.size());
  for (std::size_t t = 0; t < w.rows(); ++t) {
    for (std::size_t c = 0; c < w.cols(); ++c) {
      w(t, c) = cfg.inputs[c].kind == FeatureKind::Categorical
                    ? static_cast<double>(rng() % cfg.inputs[c].cardinality)
                    : n(rng);
    }
  }
  return w;
}

// Direct summation with explicit zero padding; independent of the library.
Array2D reference_conv(const Array2D& x, const Conv1DParams& p) {
  Array2D out(x.rows(), p.out_channels());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    for (std::size_t o = 0; o < p.out_channels(); ++o) {
      long double acc = p.bias.values[o];
      for (std::size_t i = 0; i < p.taps(); ++i) {
        const long src = static_cast<long>(t) - static_cast<long>(p.dilation * i);
        if (src < 0) continue;
        for (std::size_t c = 0; c < p.in_channels(); ++c) {
          acc += p.kernel.values[(i * p.in_channels() + c) * p.out_channels() + o] *
                 x(static_cast<std::size_t>(src), c);
        }
      }
      out(t, o) = static_cast<double>(acc);
    }
  }
  return out;
}

TEST(Conv, HandExample) {
  Array2D x(5, 1);
  for (int t = 0; t < 5; ++t) x(t, 0) = t + 1;
  auto p = make_conv(2, 1, 1, 2);
  p.kernel.values = {1.0, 2.0};
  const auto y = causal_dilated_conv(x, p);
  EXPECT_EQ(y.data(), (std::vector<double>{1, 2, 5, 8, 11}));

  auto id = make_conv(1, 1, 1, 1);
  id.kernel.values = {1.0};
  EXPECT_EQ(causal_dilated_conv(x, id), x);
}

TEST(Conv, MatchesDirectSummation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t taps = 1 + rng() % 3, in = 1 + rng() % 4, out = 1 + rng() % 4;
    auto p = make_conv(taps, in, out, 1 + rng() % 4);
    for (auto& v : p.kernel.values) v = u(rng);
    for (auto& v : p.bias.values) v = u(rng);
    Array2D x(3 + rng() % 12, in);
    for (auto& v : x.data()) v = u(rng);
    const auto got = causal_dilated_conv(x, p);
    const auto want = reference_conv(x, p);
    ASSERT_EQ(got.rows(), x.rows());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-13);
  }
}

TEST(Gate, Values) {
  Array2D f(1, 2), g(1, 2);
  f(0, 1) = 0.5;
  const auto y = gated_activation(f, g);
  EXPECT_EQ(y(0, 0), 0.0);
  EXPECT_NEAR(y(0, 1), 0.2310586, 1e-7);
  EXPECT_THROW(gated_activation(f, Array2D(2, 2)), ContractError);
}

TEST(LayerNorm, Standardizes) {
  LayerNormParams p{Tensor::zeros({2}), Tensor::zeros({2})};
  p.gain.values = {1.0, 1.0};
  Array2D x(2, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 3.0;
  x(1, 0) = x(1, 1) = 7.0;
  const auto y = layer_norm(x, p);
  EXPECT_NEAR(y(0, 0), -1.0, 1e-5);
  EXPECT_NEAR(y(0, 1), 1.0, 1e-5);
  EXPECT_EQ(y(1, 0), 0.0);
}

TEST(Receptive, Field) {
  NetworkConfig cfg;
  cfg.dilations = {};
  EXPECT_EQ(receptive_field(cfg), 1u);
  cfg.dilations = {1};
  EXPECT_EQ(receptive_field(cfg), 3u);
  cfg.dilations = {1, 2, 4, 8};
  EXPECT_EQ(receptive_field(cfg), 31u);
}

TEST(Init, CountsAndSeeds) {
  for (auto head : {HeadKind::Regression, HeadKind::Softmax}) {
    auto cfg = small_config();
    cfg.head = head;
    if (head == HeadKind::Softmax) {
      cfg.bin_edges = {-1, 0, 1, 2};
      cfg.bin_values = {-0.5, 0.5, 1.5};
    }
    const auto a = init_params(cfg, 5);
    EXPECT_EQ(a.params.count(), parameter_count(cfg));
    EXPECT_EQ(init_params(cfg, 5), a);
    EXPECT_NE(init_params(cfg, 6), a);
  }
}

TEST(Init, BiasesZeroGainsOneWeightsBounded) {
  const auto net = init_params(small_config(), 1);
  const double concat = 3.0 * net.config.column_width;
  net.params.for_each(net.config.inputs, [&](const std::string& name, const Tensor& t, bool pen) {
    // Glorot: sqrt(6 / (fan_in + fan_out)); the mix sees the concatenated columns.
    double fans = 0.0;
    if (name.ends_with(".mix")) {
      fans = concat + t.shape[1];
    } else if (t.shape.size() == 3) {
      fans = t.shape[0] * (t.shape[1] + t.shape[2]);
    } else {
      fans = t.shape[0] + (t.shape.size() > 1 ? t.shape[1] : 0);
    }
    const double bound = std::sqrt(6.0 / fans);
    for (double v : t.values) {
      if (pen) {
        EXPECT_LE(std::abs(v), bound) << name;
      } else if (name.ends_with("gain")) {
        EXPECT_EQ(v, 1.0) << name;
      } else {
        EXPECT_EQ(v, 0.0) << name;
      }
    }
  });
}

TEST(Embedding, OneHotSelectsMixRow) {
  std::vector<InputColumn> inputs{{"c", FeatureKind::Categorical, 2}};
  ColumnEmbedding e{Tensor::zeros({2, 2}), Tensor::zeros({2, 2})};
  e.table.values = {1, 0, 0, 1};
  e.mix.values = {1, 2, 3, 4};
  Array2D w(2, 1);
  w(0, 0) = 0;
  w(1, 0) = 1;
  const auto y = embed_inputs(w, inputs, {e}, 2);
  EXPECT_EQ(y(0, 0), 1.0);
  EXPECT_EQ(y(0, 1), 2.0);
  EXPECT_EQ(y(1, 0), 3.0);
  EXPECT_EQ(y(1, 1), 4.0);
  w(1, 0) = 2;
  EXPECT_THROW(embed_inputs(w, inputs, {e}, 2), InputError);

  std::vector<InputColumn> cont{{"x", FeatureKind::Continuous, 0}};
  ColumnEmbedding z{Tensor::zeros({1, 2}), e.mix};
  z.table.values = {0.3, -0.7};
  const auto zeros = embed_inputs(Array2D(3, 1), cont, {z}, 2);
  EXPECT_EQ(zeros, Array2D(3, 2));
}

TEST(Block, ResidualIdentityWhenTauIsZero) {
  std::mt19937_64 rng(2);
  auto net = init_params(small_config(), 2);
  auto& b = net.params.blocks[0];
  for (auto* c : {&b.conv_in, &b.conv_filter, &b.conv_gate, &b.conv_out}) {
    std::fill(c->kernel.values.begin(), c->kernel.values.end(), 0.0);
    std::fill(c->bias.values.begin(), c->bias.values.end(), 0.0);
  }
  Array2D x(9, net.config.embedding_dim());
  std::normal_distribution<double> n(0.0, 3.0);
  for (auto& v : x.data()) v = n(rng);
  const auto out = residual_block(x, b);
  EXPECT_EQ(out.y, x);
  EXPECT_EQ(out.skip, Array2D(9, net.config.embedding_dim()));
}

TEST(Forward, DeterministicAndCausal) {
  std::mt19937_64 rng(4);
  const auto net = init_params(small_config(), 9);
  const auto w = random_window(net.config, rng);
  const auto a = forward(net, w);
  EXPECT_EQ(forward(net, w).prediction, a.prediction);

  const std::size_t q = 8;
  auto w2 = w;
  for (std::size_t t = q + 1; t < w2.rows(); ++t) w2(t, 1) += 1.0;
  const auto b = forward(net, w2);
  for (std::size_t blk = 0; blk < a.blocks.size(); ++blk) {
    for (std::size_t t = 0; t <= q; ++t) {
      for (std::size_t c = 0; c < a.blocks[blk].residual.cols(); ++c) {
        ASSERT_EQ(a.blocks[blk].residual(t, c), b.blocks[blk].residual(t, c));
      }
    }
  }
}

TEST(Forward, ReceptiveFieldIsTight) {
  std::mt19937_64 rng(8);
  const auto net = init_params(small_config(), 3);
  const auto R = receptive_field(net.config);
  const auto w = random_window(net.config, rng);
  const double base = predict(net, w);
  const auto last = w.rows() - 1;
  auto inside = w;
  inside(last - (R - 1), 1) += 1.0;
  EXPECT_NE(predict(net, inside), base);
  auto outside = w;
  outside(last - R, 1) += 1.0;
  EXPECT_EQ(predict(net, outside), base);
}

TEST(Forward, SoftmaxSumsToOne) {
  auto cfg = small_config();
  cfg.head = HeadKind::Softmax;
  cfg.bin_edges = {-2, -1, 0, 1, 2};
  cfg.bin_values = {-1.5, -0.5, 0.5, 1.5};
  std::mt19937_64 rng(1);
  const auto net = init_params(cfg, 1);
  const auto tr = forward(net, random_window(cfg, rng));
  ASSERT_EQ(tr.probabilities.size(), 4u);
  EXPECT_NEAR(std::accumulate(tr.probabilities.begin(), tr.probabilities.end(), 0.0), 1.0, 1e-9);
  double expected = 0.0;
  for (std::size_t i = 0; i < 4; ++i) expected += tr.probabilities[i] * cfg.bin_values[i];
  EXPECT_NEAR(tr.prediction, expected, 1e-12);
}

TEST(Forward, NonFiniteNamesLayer) {
  auto net = init_params(small_config(), 1);
  Array2D w(net.config.lookback + 1, 3);
  w(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(forward(net, w), InputError);

  w(0, 1) = 0.0;
  for (auto& v : net.params.head.final_conv.bias.values) v = 1e308;
  for (auto& v : net.params.head.out_weight.values) v = 1e308;
  try {
    forward(net, w);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("output head"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace ubernet
