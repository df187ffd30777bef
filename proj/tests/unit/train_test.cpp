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

#include <algorithm>
#include <cmath>
#include <random>

#include "ubernet/error.hpp"
#include "ubernet/train.hpp"

namespace ubernet {
namespace {

NetworkConfig tiny_config() {
  NetworkConfig cfg;
  cfg.inputs = {{"p", FeatureKind::Continuous, 0},
                {"g", FeatureKind::Continuous, 0},
                {"hour", FeatureKind::Categorical, 4}};
  cfg.lookback = 8;
  cfg.channels = 4;
  cfg.column_width = 2;
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

TEST(Loss, HandValues) {
  Parameters none;
  const std::vector<double> preds{1, 3}, targets{1, 1};
  EXPECT_DOUBLE_EQ(loss(preds, targets, none, {0.0, 0.0}), 2.0);
  EXPECT_DOUBLE_EQ(loss(targets, targets, none, {0.0, 0.0}), 0.0);

  Parameters w;
  w.embeddings.push_back({Tensor::zeros({3}), Tensor::zeros({0})});
  w.embeddings[0].table.values = {1.0, -1.0, 1.0};
  EXPECT_DOUBLE_EQ(loss(targets, targets, w, {2.0, 0.0}), 3.0);
  EXPECT_THROW(loss({}, {}, none, {}), ContractError);
  EXPECT_THROW(loss(preds, std::vector<double>{1.0}, none, {}), ContractError);
}

TEST(Loss, PenaltySkipsBiasesAndNorms) {
  const auto net = init_params(tiny_config(), 1);
  auto shifted = net.params;
  for (auto& b : shifted.blocks) {
    for (auto& v : b.conv_out.bias.values) v += 1.0;
    for (auto& v : b.norm.gain.values) v += 1.0;
  }
  const LossConfig cfg{0.5, 0.0};
  EXPECT_EQ(penalty(net.params, cfg), penalty(shifted, cfg));
}

TEST(Backward, PenaltyGradientIsLambdaW) {
  const auto net = init_params(tiny_config(), 3);
  auto grads = net.params.zeros_like();
  add_penalty_gradient(net.params, {0.3, 0.0}, grads);
  std::vector<std::pair<const Tensor*, bool>> w;
  net.params.for_each(net.config.inputs,
                      [&](const std::string&, const Tensor& t, bool pen) { w.emplace_back(&t, pen); });
  std::size_t i = 0;
  grads.for_each(net.config.inputs, [&](const std::string& name, const Tensor& g, bool) {
    const auto& [t, pen] = w[i++];
    for (std::size_t j = 0; j < g.size(); ++j) {
      EXPECT_DOUBLE_EQ(g.values[j], pen ? 0.3 * t->values[j] : 0.0) << name;
    }
  });
}

TEST(Backward, ZeroResidualGivesZeroDataGradient) {
  auto net = init_params(tiny_config(), 3);
  std::mt19937_64 rng(1);
  const auto w = random_window(net.config, rng);
  const double target = predict(net, w);
  const auto r = backward(net, w, target, {0.0, 0.0});
  EXPECT_EQ(r.loss, 0.0);
  r.gradients.for_each(net.config.inputs, [](const std::string& name, const Tensor& g, bool) {
    for (double v : g.values) EXPECT_EQ(v, 0.0) << name;
  });
}

TEST(GradCheck, QuadraticToyIsExact) {
  // f(w) = sum_i (w . x_i - y_i)^2, a linear model with identity activation.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor w = Tensor::zeros({4});
  for (auto& v : w.values) v = n(rng);
  std::vector<std::vector<double>> xs(6, std::vector<double>(4));
  std::vector<double> ys(6);
  for (auto& x : xs) for (auto& v : x) v = n(rng);
  for (auto& y : ys) y = n(rng);
  const auto objective = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j < 4; ++j) z += w.values[j] * xs[i][j];
      s += (z - ys[i]) * (z - ys[i]);
    }
    return s;
  };
  Tensor g = Tensor::zeros({4});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < 4; ++j) z += w.values[j] * xs[i][j];
    for (std::size_t j = 0; j < 4; ++j) g.values[j] += 2.0 * (z - ys[i]) * xs[i][j];
  }
  GradCheckOptions opt;
  opt.all_coordinates = true;
  opt.step = 1e-4;
  const auto report = check_gradients({{"w", &w, &g}}, objective, opt);
  EXPECT_LE(report.max_rel_err, 1e-9);
  EXPECT_EQ(report.checked, 4u);
}

TEST(GradCheck, NetworkPasses) {
  for (auto head : {HeadKind::Regression, HeadKind::Softmax}) {
    auto cfg = tiny_config();
    cfg.head = head;
    cfg.bin_edges = {-3, -1, 0, 1, 3};
    cfg.bin_values = {-2, -0.5, 0.5, 2};
    cfg.max_pool = head == HeadKind::Softmax;
    const auto net = init_params(cfg, 17);
    std::mt19937_64 rng(17);
    GradCheckOptions opt;
    opt.all_coordinates = true;
    const auto r = grad_check(net, random_window(cfg, rng), 0.7, {1e-2, 0.0}, opt);
    EXPECT_TRUE(r.passed) << r.worst_parameter << " " << r.max_rel_err;
    EXPECT_EQ(r.checked, net.params.count());
  }
}

TEST(GradCheck, CorruptedEntryIsNamed) {
  const auto net = init_params(tiny_config(), 4);
  std::mt19937_64 rng(4);
  const auto w = random_window(net.config, rng);
  auto grads = backward(net, w, 1.5, {1e-3, 0.0}).gradients;
  auto& k = grads.blocks[1].conv_gate.kernel.values;
  const auto big = std::max_element(k.begin(), k.end(),
                                    [](double a, double b) { return std::abs(a) < std::abs(b); });
  *big *= 2.0;
  GradCheckOptions opt;
  opt.all_coordinates = true;
  const auto r = grad_check_against(net, w, 1.5, {1e-3, 0.0}, grads, opt);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_parameter, "block1.conv_gate.kernel");
  EXPECT_GE(r.failed, 1u);
}

WindowBatch batch_of(const NetworkConfig& cfg, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  WindowBatch b;
  b.lookback = cfg.lookback;
  b.columns = cfg.inputs;
  for (std::size_t i = 0; i < n; ++i) {
    Window w;
    w.input = random_window(cfg, rng);
    w.target = 0.5 * w.input(cfg.lookback, 0) - w.input(cfg.lookback, 1);
    b.windows.push_back(std::move(w));
  }
  return b;
}

TEST(Fit, OverfitsOneWindow) {
  const auto cfg = tiny_config();
  auto batch = batch_of(cfg, 1, 2);
  batch.windows[0].target = 1.25;
  OptimizerConfig opt;
  opt.learning_rate = 0.02;
  opt.iterations = 500;
  opt.batch_size = 1;
  const auto r = fit(init_params(cfg, 2), batch, opt, {0.0, 0.0});
  ASSERT_EQ(r.loss_history.size(), 500u);
  EXPECT_LT(r.loss_history.back(), 1e-6 * r.loss_history.front());
}

TEST(Fit, ZeroLearningRateChangesNothing) {
  const auto cfg = tiny_config();
  const auto net = init_params(cfg, 2);
  OptimizerConfig opt;
  opt.learning_rate = 0.0;
  opt.iterations = 5;
  opt.batch_size = 8;
  const auto r = fit(net, batch_of(cfg, 20, 3), opt, {1e-3, 0.0});
  EXPECT_EQ(r.network, net);
  // Shuffling only reorders the summation.
  for (double l : r.loss_history) EXPECT_NEAR(l, r.loss_history.front(), 1e-12 * l);
  opt.shuffle = false;
  const auto fixed = fit(net, batch_of(cfg, 20, 3), opt, {1e-3, 0.0});
  for (double l : fixed.loss_history) EXPECT_EQ(l, fixed.loss_history.front());
}

TEST(Fit, DeterministicAndDescending) {
  const auto cfg = tiny_config();
  const auto batch = batch_of(cfg, 64, 3);
  OptimizerConfig opt;
  opt.learning_rate = 0.01;
  opt.iterations = 30;
  opt.batch_size = 8;
  const auto a = fit(init_params(cfg, 1), batch, opt, {1e-4, 0.0});
  const auto b = fit(init_params(cfg, 1), batch, opt, {1e-4, 0.0});
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.network, b.network);
  EXPECT_LT(a.loss_history.back(), a.loss_history.front());

  opt.jobs = 3;
  const auto c = fit(init_params(cfg, 1), batch, opt, {1e-4, 0.0});
  EXPECT_EQ(c.loss_history, a.loss_history);
}

TEST(Fit, RejectsSelfFedWindowsAndDiverges) {
  const auto cfg = tiny_config();
  auto batch = batch_of(cfg, 4, 3);
  batch.windows[2].self_fed = true;
  EXPECT_THROW(fit(init_params(cfg, 1), batch, {}, {}), ContractError);

  batch.windows[2].self_fed = false;
  for (auto& w : batch.windows) w.target = 1e200;
  OptimizerConfig opt;
  opt.learning_rate = 1.0;
  opt.iterations = 20;
  try {
    fit(init_params(cfg, 1), batch, opt, {});
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_LT(e.epoch(), 20u);
  }
}

Panel sawtooth_panel(std::size_t n) {
  std::vector<double> p(n);
  for (std::size_t t = 0; t < n; ++t) p[t] = 50.0 + 5.0 * static_cast<double>(t % 10);
  return make_pickup_panel(TimeGrid::with_slots(parse_time("2014-04-01T00:00"), n, 15), p);
}

NetworkConfig pickups_only(std::size_t lookback) {
  NetworkConfig cfg;
  cfg.inputs = {{"p", FeatureKind::Continuous, 0}};
  cfg.lookback = lookback;
  cfg.channels = 8;
  cfg.column_width = 4;
  cfg.dilations = {1, 2, 4};
  return cfg;
}

TEST(PredictIterative, HorizonOneIsTeacherForced) {
  const auto panel = sawtooth_panel(40);
  const auto norm = Normalizer::fit(panel, 0, 40);
  const auto net = init_params(pickups_only(8), 6);
  const auto out = predict_iterative(net, norm, panel, 1, Array2D(1, 0));
  const auto windows = build_windows(norm.apply(panel), 8, 31, 40);
  Array2D w(9, 1);
  for (std::size_t r = 0; r < 9; ++r) w(r, 0) = norm.normalize_pickups(panel.pickups[31 + r]);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], norm.denormalize_pickups(predict(net, w)));
  EXPECT_EQ(windows.size(), 9u);
}

TEST(PredictIterative, FeedsBackItsOwnOutputs) {
  const auto panel = sawtooth_panel(40);
  const auto norm = Normalizer::fit(panel, 0, 40);
  const auto net = init_params(pickups_only(8), 6);
  std::vector<Window> seen;
  const auto out = predict_iterative(net, norm, panel, 3, Array2D(3, 0),
                                     [&](std::size_t, const Window& w) { seen.push_back(w); });
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_FALSE(seen[0].self_fed);
  EXPECT_TRUE(seen[1].self_fed);
  EXPECT_EQ(seen[1].input(8, 0), norm.normalize_pickups(out[0]));
  EXPECT_EQ(seen[2].input(7, 0), norm.normalize_pickups(out[0]));
  EXPECT_EQ(seen[2].input(8, 0), norm.normalize_pickups(out[1]));
  EXPECT_EQ(seen[1].target_time, panel.grid.end() + std::chrono::minutes(15));

  auto with_feature = panel;
  with_feature.schema =
      FeatureSchema({{"x", FeatureSet::A, FeatureKind::Continuous, Spatial::Independent}});
  with_feature.values.assign(40, 1.0);
  with_feature.missing.assign(40, 0);
  NetworkConfig cfg = pickups_only(8);
  cfg.inputs.push_back({"x", FeatureKind::Continuous, 0});
  EXPECT_THROW(predict_iterative(init_params(cfg, 1), Normalizer::fit(with_feature, 0, 40),
                                 with_feature, 3, Array2D(2, 1)),
               InputError);
}

TEST(PredictIterative, LearnsNoiselessSeries) {
  const auto panel = sawtooth_panel(400);
  const auto norm = Normalizer::fit(panel, 0, 400);
  const auto cfg = pickups_only(12);
  OptimizerConfig opt;
  opt.learning_rate = 0.01;
  opt.iterations = 150;
  opt.batch_size = 16;
  const auto trained = fit(init_params(cfg, 3), build_windows(norm.apply(panel), 12), opt, {0.0, 0.0});
  const auto out = predict_iterative(trained.network, norm, panel, 5, Array2D(5, 0));
  for (std::size_t h = 0; h < 5; ++h) {
    const double truth = 50.0 + 5.0 * static_cast<double>((400 + h) % 10);
    EXPECT_NEAR(out[h], truth, 0.05 * truth) << "step " << h;
  }
}

}  // namespace
}  // namespace ubernet
