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

#include <algorithm>
#include <cmath>

#include "ubernet/error.hpp"
#include "ubernet/train.hpp"

namespace ubernet {
namespace {

bool row_is_zero(const Array2D& a, std::size_t t) {
  for (double v : a.row(t)) {
    if (v != 0.0) return false;
  }
  return true;
}

void layer_norm_backward(const BlockTrace& tr, const LayerNormParams& p, const Array2D& dn,
                         LayerNormParams& g, Array2D& dx) {
  const auto C = dn.cols();
  const double inv_c = 1.0 / static_cast<double>(C);
  std::vector<double> dxhat(C);
  for (std::size_t t = 0; t < dn.rows(); ++t) {
    if (row_is_zero(dn, t)) continue;
    double mean_d = 0.0;
    double mean_dx = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = dn(t, c);
      const double xh = tr.normalized(t, c);
      g.gain.values[c] += d * xh;
      g.shift.values[c] += d;
      dxhat[c] = d * p.gain.values[c];
      mean_d += dxhat[c];
      mean_dx += dxhat[c] * xh;
    }
    mean_d *= inv_c;
    mean_dx *= inv_c;
    const double rstd = tr.inv_std[t];
    for (std::size_t c = 0; c < C; ++c) {
      dx(t, c) += rstd * (dxhat[c] - mean_d - tr.normalized(t, c) * mean_dx);
    }
  }
}

void embedding_backward(const Array2D& window, const NetworkConfig& cfg,
                        const std::vector<ColumnEmbedding>& emb, const Array2D& dx,
                        std::vector<ColumnEmbedding>& g) {
  const auto dim = cfg.embedding_dim();
  for (std::size_t t = 0; t < window.rows(); ++t) {
    if (row_is_zero(dx, t)) continue;
    const auto d = dx.row(t);
    for (std::size_t c = 0; c < cfg.inputs.size(); ++c) {
      const double v = window(t, c);
      const auto& table = emb[c].table;
      const auto width = table.shape[1];
      const bool categorical = cfg.inputs[c].kind == FeatureKind::Categorical;
      const std::size_t row = categorical ? static_cast<std::size_t>(v) : 0;
      const double scale = categorical ? 1.0 : v;
      const double* e = table.values.data() + row * width;
      double* ge = g[c].table.values.data() + row * width;
      for (std::size_t j = 0; j < width; ++j) {
        const double ej = scale * e[j];
        const double* m = emb[c].mix.values.data() + j * dim;
        double* gm = g[c].mix.values.data() + j * dim;
        double de = 0.0;
        for (std::size_t o = 0; o < dim; ++o) {
          gm[o] += ej * d[o];
          de += m[o] * d[o];
        }
        ge[j] += scale * de;
      }
    }
  }
}

}  // namespace

void causal_dilated_conv_backward(const Array2D& x, const Conv1DParams& p, const Array2D& out_grad,
                                  Array2D* input_grad, Conv1DParams& grads) {
  const auto in = p.in_channels();
  const auto out_ch = p.out_channels();
  const double* kernel = p.kernel.values.data();
  double* gk = grads.kernel.values.data();
  for (std::size_t t = 0; t < out_grad.rows(); ++t) {
    if (row_is_zero(out_grad, t)) continue;
    const auto dy = out_grad.row(t);
    for (std::size_t o = 0; o < out_ch; ++o) grads.bias.values[o] += dy[o];
    for (std::size_t i = 0; i < p.taps(); ++i) {
      const std::size_t back = i * p.dilation;
      if (back > t) break;
      const std::size_t src = t - back;
      const auto xs = x.row(src);
      for (std::size_t c = 0; c < in; ++c) {
        const double xv = xs[c];
        const double* k = kernel + (i * in + c) * out_ch;
        double* g = gk + (i * in + c) * out_ch;
        double acc = 0.0;
        for (std::size_t o = 0; o < out_ch; ++o) {
          g[o] += dy[o] * xv;
          acc += k[o] * dy[o];
        }
        if (input_grad) (*input_grad)(src, c) += acc;
      }
    }
  }
}

double penalty(const Parameters& params, const LossConfig& cfg) {
  if (cfg.l2 < 0.0 || cfg.l1 < 0.0) throw ContractError("regularization strengths must be >= 0");
  if (cfg.l2 == 0.0 && cfg.l1 == 0.0) return 0.0;
  double sq = 0.0;
  double abs = 0.0;
  const std::vector<InputColumn> none;
  params.for_each(none, [&](const std::string&, const Tensor& t, bool penalized) {
    if (!penalized) return;
    for (double w : t.values) {
      sq += w * w;
      abs += std::abs(w);
    }
  });
  return 0.5 * cfg.l2 * sq + cfg.l1 * abs;
}

double loss(std::span<const double> predictions, std::span<const double> targets,
            const Parameters& params, const LossConfig& cfg) {
  if (predictions.empty() || predictions.size() != targets.size()) {
    throw ContractError("loss needs equal, non-empty prediction and target lists");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = targets[i] - predictions[i];
    sum += r * r;
  }
  return sum / static_cast<double>(predictions.size()) + penalty(params, cfg);
}

std::size_t target_bin(const NetworkConfig& config, double target) {
  const auto& edges = config.bin_edges;
  const auto bins = config.bin_values.size();
  const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, target);
  const auto idx = static_cast<std::size_t>(it - (edges.begin() + 1));
  return std::min(idx, bins - 1);
}

double window_data_loss(const NetworkConfig& config, const ForwardTrace& trace, double target) {
  if (config.head == HeadKind::Regression) {
    const double r = target - trace.prediction;
    return r * r;
  }
  const auto b = target_bin(config, target);
  return -std::log(std::max(trace.probabilities[b], 1e-300));
}

void backward_data(const Network& net, const Array2D& window, const ForwardTrace& tr, double target,
                   Gradients& g) {
  const auto& cfg = net.config;
  const auto& p = net.params;
  const auto T = window.rows();
  const auto outputs = cfg.outputs();

  std::vector<double> dlogits(outputs, 0.0);
  if (cfg.head == HeadKind::Regression) {
    dlogits[0] = 2.0 * (tr.prediction - target);
  } else {
    const auto b = target_bin(cfg, target);
    for (std::size_t o = 0; o < outputs; ++o) dlogits[o] = tr.probabilities[o] - (o == b ? 1.0 : 0.0);
  }

  const auto k = tr.head_input.size();
  Array2D d_head(T, k);
  for (std::size_t c = 0; c < k; ++c) {
    const double* w = p.head.out_weight.values.data() + c * outputs;
    double* gw = g.head.out_weight.values.data() + c * outputs;
    double acc = 0.0;
    for (std::size_t o = 0; o < outputs; ++o) {
      gw[o] += tr.head_input[c] * dlogits[o];
      acc += w[o] * dlogits[o];
    }
    d_head(tr.head_rows[c], c) += acc;
  }
  for (std::size_t o = 0; o < outputs; ++o) g.head.out_bias.values[o] += dlogits[o];

  Array2D d_skip(T, cfg.embedding_dim());
  causal_dilated_conv_backward(tr.skip_act, p.head.final_conv, d_head, &d_skip, g.head.final_conv);
  for (std::size_t i = 0; i < d_skip.size(); ++i) {
    const double a = tr.skip_act.data()[i];
    d_skip.data()[i] *= 1.0 - a * a;
  }

  Array2D dy(T, cfg.embedding_dim());  // gradient w.r.t. the block output y
  for (std::size_t bi = p.blocks.size(); bi-- > 0;) {
    const auto& bt = tr.blocks[bi];
    const auto& bp = p.blocks[bi];
    auto& bg = g.blocks[bi];

    Array2D d_tau = dy;
    for (std::size_t i = 0; i < d_tau.size(); ++i) d_tau.data()[i] += d_skip.data()[i];

    Array2D d_gated(T, bt.gated.cols());
    causal_dilated_conv_backward(bt.gated, bp.conv_out, d_tau, &d_gated, bg.conv_out);

    Array2D d_filter(T, bt.gated.cols());
    Array2D d_gate(T, bt.gated.cols());
    for (std::size_t i = 0; i < d_gated.size(); ++i) {
      const double f = bt.filter_act.data()[i];
      const double s = bt.gate_act.data()[i];
      const double dz = d_gated.data()[i];
      d_filter.data()[i] = dz * s * (1.0 - f * f);
      d_gate.data()[i] = dz * f * s * (1.0 - s);
    }
    Array2D d_hidden(T, bt.hidden.cols());
    causal_dilated_conv_backward(bt.hidden, bp.conv_filter, d_filter, &d_hidden, bg.conv_filter);
    causal_dilated_conv_backward(bt.hidden, bp.conv_gate, d_gate, &d_hidden, bg.conv_gate);

    Array2D d_normed(T, bt.normed.cols());
    causal_dilated_conv_backward(bt.normed, bp.conv_in, d_hidden, &d_normed, bg.conv_in);

    // dx = dy (identity path) + norm path
    layer_norm_backward(bt, bp.norm, d_normed, bg.norm, dy);
  }
  embedding_backward(window, cfg, p.embeddings, dy, g.embeddings);
}

void add_penalty_gradient(const Parameters& params, const LossConfig& cfg, Gradients& grads) {
  if (cfg.l2 == 0.0 && cfg.l1 == 0.0) return;
  std::vector<const Tensor*> weights;
  std::vector<bool> penalized;
  const std::vector<InputColumn> none;
  params.for_each(none, [&](const std::string&, const Tensor& t, bool pen) {
    weights.push_back(&t);
    penalized.push_back(pen);
  });
  std::size_t i = 0;
  grads.for_each(none, [&](const std::string&, Tensor& g, bool) {
    const Tensor* w = weights[i];
    if (penalized[i++]) {
      for (std::size_t j = 0; j < g.values.size(); ++j) {
        const double wj = w->values[j];
        g.values[j] += cfg.l2 * wj;
        if (cfg.l1 != 0.0) g.values[j] += cfg.l1 * static_cast<double>((wj > 0.0) - (wj < 0.0));
      }
    }
  });
}

BackwardResult backward(const Network& net, const Array2D& window, double target,
                        const LossConfig& cfg) {
  const auto tr = forward(net, window);
  BackwardResult result;
  result.gradients = net.params.zeros_like();
  backward_data(net, window, tr, target, result.gradients);
  add_penalty_gradient(net.params, cfg, result.gradients);
  result.loss = window_data_loss(net.config, tr, target) + penalty(net.params, cfg);
  result.gradients.for_each(net.config.inputs, [](const std::string& name, const Tensor& t, bool) {
    for (double v : t.values) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in " + name);
    }
  });
  return result;
}

}  // namespace ubernet
