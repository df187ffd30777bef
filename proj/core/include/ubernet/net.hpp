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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ubernet/array2d.hpp"
#include "ubernet/panel.hpp"

namespace ubernet {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  static Tensor zeros(std::vector<std::size_t> shape);
  std::size_t size() const { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

// kernel: taps x in x out. out(t) = bias + sum_i kernel[i] . x(t - dilation * i)
struct Conv1DParams {
  Tensor kernel;
  Tensor bias;
  std::size_t dilation = 1;

  std::size_t taps() const { return kernel.shape[0]; }
  std::size_t in_channels() const { return kernel.shape[1]; }
  std::size_t out_channels() const { return kernel.shape[2]; }
  bool operator==(const Conv1DParams&) const = default;
};

Conv1DParams make_conv(std::size_t taps, std::size_t in, std::size_t out, std::size_t dilation);

struct LayerNormParams {
  Tensor gain;
  Tensor shift;
  bool operator==(const LayerNormParams&) const = default;
};

// 2k -> k (1x1) -> k (two dilated 1x3: filter and gate) -> 2k (1x1)
struct ResidualBlockParams {
  LayerNormParams norm;
  Conv1DParams conv_in;
  Conv1DParams conv_filter;
  Conv1DParams conv_gate;
  Conv1DParams conv_out;
  bool operator==(const ResidualBlockParams&) const = default;
};

// Look-up table for a categorical column (levels x width) or a projection
// row for a continuous column (1 x width), plus that column's slice of the
// mixing matrix (width x 2k).
struct ColumnEmbedding {
  Tensor table;
  Tensor mix;
  bool operator==(const ColumnEmbedding&) const = default;
};

struct HeadParams {
  Conv1DParams final_conv;  // 2k -> k, 1x1
  Tensor out_weight;        // k x outputs
  Tensor out_bias;          // outputs
  bool operator==(const HeadParams&) const = default;
};

// Every learnable array of the network. The same type holds gradients.
struct Parameters {
  std::vector<ColumnEmbedding> embeddings;
  std::vector<ResidualBlockParams> blocks;
  HeadParams head;

  // Visits arrays in canonical order as f(name, tensor, penalized).
  // Penalized arrays are the weights; biases and norm parameters are not.
  template <typename F>
  void for_each(const std::vector<InputColumn>& inputs, F&& f);
  template <typename F>
  void for_each(const std::vector<InputColumn>& inputs, F&& f) const;

  Parameters zeros_like() const;
  std::size_t count() const;
  bool operator==(const Parameters&) const = default;
};

using Gradients = Parameters;

enum class HeadKind { Regression, Softmax };

struct NetworkConfig {
  std::vector<InputColumn> inputs;
  std::size_t lookback = 16;
  // Inner channel size k; the embedding width is f = 2k.
  std::size_t channels = 100;
  // Per-column width ahead of the mixing matrix.
  std::size_t column_width = 8;
  std::vector<std::size_t> dilations{1, 2};
  HeadKind head = HeadKind::Regression;
  // Softmax head: B + 1 ascending bin edges and B representative values.
  std::vector<double> bin_edges;
  std::vector<double> bin_values;
  // Max over time of the head features instead of the last row.
  bool max_pool = false;
  double layer_norm_epsilon = 1e-5;

  std::size_t embedding_dim() const { return 2 * channels; }
  std::size_t outputs() const { return head == HeadKind::Regression ? 1 : bin_values.size(); }
  // Throws ContractError when inconsistent.
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// 1 + sum over blocks of (3 - 1) * dilation.
std::size_t receptive_field(const NetworkConfig& config);
// Closed-form number of scalar parameters.
std::size_t parameter_count(const NetworkConfig& config);

struct Network {
  NetworkConfig config;
  Parameters params;
  bool operator==(const Network&) const = default;
};

// Glorot-uniform weights, zero biases, unit norm gains. Each array draws
// from its own stream seeded by (seed, array name).
Network init_params(const NetworkConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

// (s+1) x columns raw window -> (s+1) x 2k.
Array2D embed_inputs(const Array2D& window, const std::vector<InputColumn>& inputs,
                     const std::vector<ColumnEmbedding>& embeddings, std::size_t dim);

// Left zero padding keeps the output length equal to the input length.
Array2D causal_dilated_conv(const Array2D& x, const Conv1DParams& p);

// tanh(a_f) * sigmoid(a_g), elementwise.
Array2D gated_activation(const Array2D& a_f, const Array2D& a_g);

// Per timestep over the channel axis; epsilon sits inside the square root.
Array2D layer_norm(const Array2D& x, const LayerNormParams& p, double epsilon = 1e-5);

struct BlockOutput {
  Array2D y;
  Array2D skip;
};

// tau = conv_out(gated(conv_filter(h), conv_gate(h))), h = conv_in(norm(x));
// y = x + tau, skip = tau.
BlockOutput residual_block(const Array2D& x, const ResidualBlockParams& p,
                           double epsilon = 1e-5);

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

struct BlockTrace {
  Array2D input;
  Array2D normalized;  // (x - mean) / sqrt(var + eps), before gain/shift
  std::vector<double> inv_std;
  Array2D normed;
  Array2D hidden;
  Array2D filter_act;  // tanh(filter pre-activation)
  Array2D gate_act;    // sigmoid(gate pre-activation)
  Array2D gated;
  Array2D residual;    // tau(x)
};

struct ForwardTrace {
  Array2D embedded;
  std::vector<BlockTrace> blocks;
  Array2D skip_sum;
  Array2D skip_act;        // tanh(skip_sum)
  Array2D head_features;   // final 1x1 conv output
  std::vector<std::size_t> head_rows;  // source row of each head input channel
  std::vector<double> head_input;
  std::vector<double> logits;
  std::vector<double> probabilities;  // softmax head only
  // Regression: the scalar output. Softmax: expected bin value.
  double prediction = 0.0;
};

// Throws NumericError naming the layer when an intermediate is non-finite.
ForwardTrace forward(const Network& net, const Array2D& window);
double predict(const Network& net, const Array2D& window);

std::vector<double> softmax(std::span<const double> logits);

// ---------------------------------------------------------------------------

template <typename F>
void Parameters::for_each(const std::vector<InputColumn>& inputs, F&& f) {
  for (std::size_t c = 0; c < embeddings.size(); ++c) {
    const std::string prefix =
        "embed." + (c < inputs.size() ? inputs[c].name : std::to_string(c)) + ".";
    f(prefix + "table", embeddings[c].table, true);
    f(prefix + "mix", embeddings[c].mix, true);
  }
  const auto conv = [&f](const std::string& prefix, Conv1DParams& p) {
    f(prefix + ".kernel", p.kernel, true);
    f(prefix + ".bias", p.bias, false);
  };
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    f(prefix + "norm.gain", blocks[b].norm.gain, false);
    f(prefix + "norm.shift", blocks[b].norm.shift, false);
    conv(prefix + "conv_in", blocks[b].conv_in);
    conv(prefix + "conv_filter", blocks[b].conv_filter);
    conv(prefix + "conv_gate", blocks[b].conv_gate);
    conv(prefix + "conv_out", blocks[b].conv_out);
  }
  conv("head.final", head.final_conv);
  f("head.out.weight", head.out_weight, true);
  f("head.out.bias", head.out_bias, false);
}

template <typename F>
void Parameters::for_each(const std::vector<InputColumn>& inputs, F&& f) const {
  const_cast<Parameters*>(this)->for_each(
      inputs, [&f](const std::string& name, Tensor& t, bool penalized) {
        f(name, static_cast<const Tensor&>(t), penalized);
      });
}

}  // namespace ubernet
