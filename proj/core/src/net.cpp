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

#include "ubernet/net.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ubernet/error.hpp"
#include "ubernet/parallel.hpp"

namespace ubernet {
namespace {

void check_finite(const Array2D& a, const char* layer) {
  for (double v : a.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite activation in ") + layer);
  }
}

void check_finite(const std::vector<double>& a, const char* layer) {
  for (double v : a) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite activation in ") + layer);
  }
}

double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void fill_uniform(Tensor& t, double bound, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values) v = dist(rng);
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(n, 0.0);
  return t;
}

Conv1DParams make_conv(std::size_t taps, std::size_t in, std::size_t out, std::size_t dilation) {
  if (taps == 0 || dilation == 0) throw ContractError("convolution needs taps >= 1 and dilation >= 1");
  Conv1DParams p;
  p.kernel = Tensor::zeros({taps, in, out});
  p.bias = Tensor::zeros({out});
  p.dilation = dilation;
  return p;
}

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  const std::vector<InputColumn> none;
  z.for_each(none, [](const std::string&, Tensor& t, bool) {
    std::fill(t.values.begin(), t.values.end(), 0.0);
  });
  return z;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  const std::vector<InputColumn> none;
  for_each(none, [&n](const std::string&, const Tensor& t, bool) { n += t.size(); });
  return n;
}

void NetworkConfig::validate() const {
  if (inputs.empty()) throw ContractError("network needs at least one input column");
  if (channels == 0 || column_width == 0) throw ContractError("channel sizes must be positive");
  if (dilations.empty()) throw ContractError("network needs at least one residual block");
  for (auto d : dilations) {
    if (d == 0) throw ContractError("dilation must be >= 1");
  }
  for (const auto& c : inputs) {
    if (c.kind == FeatureKind::Categorical && c.cardinality <= 0) {
      throw ContractError("categorical input '" + c.name + "' has no cardinality");
    }
  }
  if (head == HeadKind::Softmax) {
    if (bin_values.size() < 2 || bin_edges.size() != bin_values.size() + 1) {
      throw ContractError("softmax head needs B >= 2 values and B + 1 edges");
    }
    if (!std::is_sorted(bin_edges.begin(), bin_edges.end())) {
      throw ContractError("softmax bin edges must ascend");
    }
  }
  if (!(layer_norm_epsilon > 0.0)) throw ContractError("layer norm epsilon must be positive");
}

std::size_t receptive_field(const NetworkConfig& config) {
  std::size_t r = 1;
  for (auto d : config.dilations) r += 2 * d;
  return r;
}

std::size_t parameter_count(const NetworkConfig& config) {
  const auto k = config.channels;
  const auto f = config.embedding_dim();
  const auto w = config.column_width;
  std::size_t n = 0;
  for (const auto& c : config.inputs) {
    const std::size_t rows = c.kind == FeatureKind::Categorical ? c.cardinality : 1;
    n += rows * w + w * f;
  }
  const std::size_t block = 2 * f                 // norm gain + shift
                            + f * k + k           // conv_in
                            + 2 * (3 * k * k + k) // filter + gate
                            + k * f + f;          // conv_out
  n += config.dilations.size() * block;
  n += f * k + k;                                  // final 1x1
  n += k * config.outputs() + config.outputs();   // output projection
  return n;
}

Network init_params(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Network net;
  net.config = config;
  auto& p = net.params;
  const auto k = config.channels;
  const auto f = config.embedding_dim();
  const auto w = config.column_width;
  for (const auto& c : config.inputs) {
    const std::size_t rows = c.kind == FeatureKind::Categorical ? c.cardinality : 1;
    p.embeddings.push_back({Tensor::zeros({rows, w}), Tensor::zeros({w, f})});
  }
  for (auto d : config.dilations) {
    ResidualBlockParams b;
    b.norm.gain = Tensor::zeros({f});
    std::fill(b.norm.gain.values.begin(), b.norm.gain.values.end(), 1.0);
    b.norm.shift = Tensor::zeros({f});
    b.conv_in = make_conv(1, f, k, 1);
    b.conv_filter = make_conv(3, k, k, d);
    b.conv_gate = make_conv(3, k, k, d);
    b.conv_out = make_conv(1, k, f, 1);
    p.blocks.push_back(std::move(b));
  }
  p.head.final_conv = make_conv(1, f, k, 1);
  p.head.out_weight = Tensor::zeros({k, config.outputs()});
  p.head.out_bias = Tensor::zeros({config.outputs()});

  const std::size_t concat_width = config.inputs.size() * w;
  p.for_each(config.inputs, [&](const std::string& name, Tensor& t, bool penalized) {
    if (!penalized) return;
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    if (name.ends_with(".mix")) {
      fan_in = concat_width;
      fan_out = t.shape[1];
    } else if (t.shape.size() == 3) {
      fan_in = t.shape[0] * t.shape[1];
      fan_out = t.shape[0] * t.shape[2];
    } else {
      fan_in = t.shape[0];
      fan_out = t.shape[1];
    }
    fill_uniform(t, glorot_bound(fan_in, fan_out), derive_seed(seed, name));
  });
  return net;
}

// ---------------------------------------------------------------------------

Array2D embed_inputs(const Array2D& window, const std::vector<InputColumn>& inputs,
                     const std::vector<ColumnEmbedding>& embeddings, std::size_t dim) {
  if (window.cols() != inputs.size() || embeddings.size() != inputs.size()) {
    throw ContractError("window has " + std::to_string(window.cols()) + " columns, network expects " +
                        std::to_string(inputs.size()));
  }
  Array2D out(window.rows(), dim);
  for (std::size_t t = 0; t < window.rows(); ++t) {
    auto dst = out.row(t);
    for (std::size_t c = 0; c < inputs.size(); ++c) {
      const double v = window(t, c);
      const auto& table = embeddings[c].table;
      const auto& mix = embeddings[c].mix;
      const std::size_t width = table.shape[1];
      const double* e = nullptr;
      double scale = 1.0;
      if (inputs[c].kind == FeatureKind::Categorical) {
        const double level = std::round(v);
        if (!(level == v) || level < 0 || level >= static_cast<double>(table.shape[0])) {
          throw InputError("categorical input '" + inputs[c].name + "' has invalid level " +
                           std::to_string(v));
        }
        e = table.values.data() + static_cast<std::size_t>(level) * width;
      } else {
        if (!std::isfinite(v)) throw InputError("non-finite value in input '" + inputs[c].name + "'");
        e = table.values.data();
        scale = v;
      }
      for (std::size_t j = 0; j < width; ++j) {
        const double ej = scale * e[j];
        const double* m = mix.values.data() + j * dim;
        for (std::size_t o = 0; o < dim; ++o) dst[o] += ej * m[o];
      }
    }
  }
  return out;
}

Array2D causal_dilated_conv(const Array2D& x, const Conv1DParams& p) {
  if (x.cols() != p.in_channels()) {
    throw ContractError("convolution expects " + std::to_string(p.in_channels()) +
                        " input channels, got " + std::to_string(x.cols()));
  }
  const auto T = x.rows();
  const auto in = p.in_channels();
  const auto out_ch = p.out_channels();
  Array2D out(T, out_ch);
  const double* kernel = p.kernel.values.data();
  for (std::size_t t = 0; t < T; ++t) {
    auto dst = out.row(t);
    std::copy(p.bias.values.begin(), p.bias.values.end(), dst.begin());
    for (std::size_t i = 0; i < p.taps(); ++i) {
      const std::size_t back = i * p.dilation;
      if (back > t) break;  // zero padding
      const auto src = x.row(t - back);
      const double* k_i = kernel + i * in * out_ch;
      for (std::size_t c = 0; c < in; ++c) {
        const double xv = src[c];
        const double* k_ic = k_i + c * out_ch;
        for (std::size_t o = 0; o < out_ch; ++o) dst[o] += k_ic[o] * xv;
      }
    }
  }
  return out;
}

Array2D gated_activation(const Array2D& a_f, const Array2D& a_g) {
  if (a_f.rows() != a_g.rows() || a_f.cols() != a_g.cols()) {
    throw ContractError("gated activation needs equal shapes");
  }
  Array2D z(a_f.rows(), a_f.cols());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z.data()[i] = std::tanh(a_f.data()[i]) * sigmoid(a_g.data()[i]);
  }
  return z;
}

namespace {

void layer_norm_into(const Array2D& x, const LayerNormParams& p, double eps, Array2D& normalized,
                     std::vector<double>& inv_std, Array2D& out) {
  const auto C = x.cols();
  if (p.gain.size() != C || p.shift.size() != C) throw ContractError("layer norm width mismatch");
  normalized = Array2D(x.rows(), C);
  out = Array2D(x.rows(), C);
  inv_std.assign(x.rows(), 0.0);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const auto row = x.row(t);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(C);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(C);
    const double rstd = 1.0 / std::sqrt(var + eps);
    inv_std[t] = rstd;
    for (std::size_t c = 0; c < C; ++c) {
      const double xh = (row[c] - mean) * rstd;
      normalized(t, c) = xh;
      out(t, c) = p.gain.values[c] * xh + p.shift.values[c];
    }
  }
}

void block_forward(const Array2D& x, const ResidualBlockParams& p, double eps, BlockTrace& tr) {
  if (x.cols() != p.conv_in.in_channels() || p.conv_out.out_channels() != x.cols()) {
    throw ContractError("residual block expects width " + std::to_string(p.conv_in.in_channels()) +
                        ", got " + std::to_string(x.cols()));
  }
  tr.input = x;
  layer_norm_into(x, p.norm, eps, tr.normalized, tr.inv_std, tr.normed);
  tr.hidden = causal_dilated_conv(tr.normed, p.conv_in);
  tr.filter_act = causal_dilated_conv(tr.hidden, p.conv_filter);
  tr.gate_act = causal_dilated_conv(tr.hidden, p.conv_gate);
  tr.gated = Array2D(x.rows(), tr.filter_act.cols());
  for (std::size_t i = 0; i < tr.gated.size(); ++i) {
    auto& f = tr.filter_act.data()[i];
    auto& g = tr.gate_act.data()[i];
    f = std::tanh(f);
    g = sigmoid(g);
    tr.gated.data()[i] = f * g;
  }
  tr.residual = causal_dilated_conv(tr.gated, p.conv_out);
}

}  // namespace

Array2D layer_norm(const Array2D& x, const LayerNormParams& p, double epsilon) {
  Array2D normalized;
  Array2D out;
  std::vector<double> inv_std;
  layer_norm_into(x, p, epsilon, normalized, inv_std, out);
  return out;
}

BlockOutput residual_block(const Array2D& x, const ResidualBlockParams& p, double epsilon) {
  BlockTrace tr;
  block_forward(x, p, epsilon, tr);
  BlockOutput out;
  out.y = x;
  for (std::size_t i = 0; i < out.y.size(); ++i) out.y.data()[i] += tr.residual.data()[i];
  out.skip = std::move(tr.residual);
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

ForwardTrace forward(const Network& net, const Array2D& window) {
  const auto& cfg = net.config;
  const auto& params = net.params;
  ForwardTrace tr;
  tr.embedded = embed_inputs(window, cfg.inputs, params.embeddings, cfg.embedding_dim());
  check_finite(tr.embedded, "embedding");

  tr.blocks.resize(params.blocks.size());
  const Array2D* x = &tr.embedded;
  Array2D next;
  tr.skip_sum = Array2D(window.rows(), cfg.embedding_dim());
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    auto& bt = tr.blocks[b];
    block_forward(*x, params.blocks[b], cfg.layer_norm_epsilon, bt);
    check_finite(bt.residual, "residual block");
    for (std::size_t i = 0; i < tr.skip_sum.size(); ++i) tr.skip_sum.data()[i] += bt.residual.data()[i];
    if (b + 1 < params.blocks.size()) {
      next = bt.input;
      for (std::size_t i = 0; i < next.size(); ++i) next.data()[i] += bt.residual.data()[i];
      tr.blocks[b + 1].input = std::move(next);
      x = &tr.blocks[b + 1].input;
    }
  }
  tr.skip_act = tr.skip_sum;
  for (auto& v : tr.skip_act.data()) v = std::tanh(v);
  tr.head_features = causal_dilated_conv(tr.skip_act, params.head.final_conv);
  check_finite(tr.head_features, "head convolution");

  const auto k = tr.head_features.cols();
  const auto T = tr.head_features.rows();
  tr.head_input.assign(k, 0.0);
  tr.head_rows.assign(k, T - 1);
  if (cfg.max_pool) {
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t best = 0;
      for (std::size_t t = 1; t < T; ++t) {
        if (tr.head_features(t, c) > tr.head_features(best, c)) best = t;
      }
      tr.head_rows[c] = best;
    }
  }
  for (std::size_t c = 0; c < k; ++c) tr.head_input[c] = tr.head_features(tr.head_rows[c], c);

  const auto outputs = cfg.outputs();
  tr.logits.assign(params.head.out_bias.values.begin(), params.head.out_bias.values.end());
  for (std::size_t c = 0; c < k; ++c) {
    const double* w = params.head.out_weight.values.data() + c * outputs;
    for (std::size_t o = 0; o < outputs; ++o) tr.logits[o] += w[o] * tr.head_input[c];
  }
  check_finite(tr.logits, "output head");
  if (cfg.head == HeadKind::Regression) {
    tr.prediction = tr.logits[0];
  } else {
    tr.probabilities = softmax(tr.logits);
    tr.prediction = 0.0;
    for (std::size_t b = 0; b < outputs; ++b) tr.prediction += tr.probabilities[b] * cfg.bin_values[b];
  }
  return tr;
}

double predict(const Network& net, const Array2D& window) { return forward(net, window).prediction; }

}  // namespace ubernet
