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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ubernet/net.hpp"
#include "ubernet/panel.hpp"

namespace ubernet {

struct LossConfig {
  // Weight-decay strength (lambda); the penalty is lambda / 2 * sum w^2.
  double l2 = 1e-4;
  // Optional sum |w| term, off by default.
  double l1 = 0.0;
};

struct OptimizerConfig {
  double learning_rate = 1e-3;
  std::size_t iterations = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  bool shuffle = true;
  // Worker threads for per-window gradients inside a batch.
  std::size_t jobs = 1;
};

// Penalty over the weight arrays (biases and norm parameters excluded).
double penalty(const Parameters& params, const LossConfig& cfg);

// (1/T) sum (target - prediction)^2 + penalty. Throws ContractError on
// empty or mismatched inputs.
double loss(std::span<const double> predictions, std::span<const double> targets,
            const Parameters& params, const LossConfig& cfg);

// Softmax head: index of the bin holding `target` (clamped to the ends).
std::size_t target_bin(const NetworkConfig& config, double target);

// Data term of one window: squared error (regression) or cross-entropy
// of the target bin (softmax).
double window_data_loss(const NetworkConfig& config, const ForwardTrace& trace, double target);

struct BackwardResult {
  double loss = 0.0;
  Gradients gradients;
};

// Gradients of the data term only, from a recorded forward trace.
// `grads` must be shaped like the network parameters and is overwritten.
void backward_data(const Network& net, const Array2D& window, const ForwardTrace& trace,
                   double target, Gradients& grads);

// Adds d(penalty)/dw to `grads`.
void add_penalty_gradient(const Parameters& params, const LossConfig& cfg, Gradients& grads);

// Per-window loss (data term + penalty) and its exact gradient.
// Throws NumericError naming the array when a gradient is non-finite.
BackwardResult backward(const Network& net, const Array2D& window, double target,
                        const LossConfig& cfg);

// Adjoint of causal_dilated_conv. Accumulates into `grads` (kernel, bias)
// and, when non-null, into `input_grad`.
void causal_dilated_conv_backward(const Array2D& x, const Conv1DParams& p, const Array2D& out_grad,
                                  Array2D* input_grad, Conv1DParams& grads);

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Coordinates sampled when not checking all of them; at least one per
  // array is always included.
  std::size_t coordinates = 200;
  bool all_coordinates = false;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  // Coordinates over tolerance, and the largest max(|a|, |n|) among them.
  std::size_t failed = 0;
  double largest_failing = 0.0;
  bool passed = true;
};

struct ParamRef {
  std::string name;
  Tensor* tensor = nullptr;
  const Tensor* analytic = nullptr;
};

// Central differences of `objective` against the analytic gradients in
// `params`. Relative error uses max(|a|, |n|, 1e-12) as the denominator.
GradCheckReport check_gradients(const std::vector<ParamRef>& params,
                                const std::function<double()>& objective,
                                const GradCheckOptions& options);

GradCheckReport grad_check(const Network& net, const Array2D& window, double target,
                           const LossConfig& loss_cfg, const GradCheckOptions& options);

// Checks caller-supplied gradients instead of recomputing them.
GradCheckReport grad_check_against(const Network& net, const Array2D& window, double target,
                                   const LossConfig& loss_cfg, const Gradients& analytic,
                                   const GradCheckOptions& options);

// ---------------------------------------------------------------------------
// Training and inference
// ---------------------------------------------------------------------------

struct FitResult {
  Network network;
  // Mean per-window loss of each epoch.
  std::vector<double> loss_history;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Mini-batch gradient descent with teacher forcing: every input cell is an
// observed value. Throws DivergenceError with the epoch index when the loss
// stops being finite, ContractError when a window holds model outputs.
FitResult fit(Network net, const WindowBatch& batch, const OptimizerConfig& opt,
              const LossConfig& loss_cfg, const EpochCallback& on_epoch = {});

using WindowInspector = std::function<void(std::size_t step, const Window& window)>;

// Multi-step forecast from the last lookback + 1 rows of `history` (raw
// units). Pickups already predicted are fed back; exogenous cells of future
// rows come from `future_features` (horizon x features, raw units, schema
// order). Returns predictions in pickup units.
std::vector<double> predict_iterative(const Network& net, const Normalizer& normalizer,
                                      const Panel& history, std::size_t horizon,
                                      const Array2D& future_features,
                                      const WindowInspector& inspect = {});

}  // namespace ubernet
