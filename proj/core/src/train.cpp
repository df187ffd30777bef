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

#include "ubernet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ubernet/error.hpp"
#include "ubernet/parallel.hpp"

namespace ubernet {
namespace {

std::vector<ParamRef> param_refs(Parameters& params, const Gradients& grads,
                                 const std::vector<InputColumn>& inputs) {
  std::vector<ParamRef> refs;
  params.for_each(inputs, [&](const std::string& name, Tensor& t, bool) {
    refs.push_back({name, &t, nullptr});
  });
  std::size_t i = 0;
  grads.for_each(inputs, [&](const std::string&, const Tensor& t, bool) { refs[i++].analytic = &t; });
  return refs;
}

void accumulate(Gradients& acc, const Gradients& g) {
  const std::vector<InputColumn> none;
  std::vector<const Tensor*> src;
  g.for_each(none, [&](const std::string&, const Tensor& t, bool) { src.push_back(&t); });
  std::size_t i = 0;
  acc.for_each(none, [&](const std::string&, Tensor& t, bool) {
    const auto& s = src[i++]->values;
    for (std::size_t j = 0; j < t.values.size(); ++j) t.values[j] += s[j];
  });
}

void zero(Gradients& g) {
  const std::vector<InputColumn> none;
  g.for_each(none, [](const std::string&, Tensor& t, bool) {
    std::fill(t.values.begin(), t.values.end(), 0.0);
  });
}

}  // namespace

GradCheckReport check_gradients(const std::vector<ParamRef>& params,
                                const std::function<double()>& objective,
                                const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ContractError("finite-difference step must be positive");
  // (array, index) pairs to probe
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t total = 0;
  for (const auto& p : params) total += p.tensor->size();
  if (options.all_coordinates || total <= options.coordinates) {
    for (std::size_t a = 0; a < params.size(); ++a) {
      for (std::size_t j = 0; j < params[a].tensor->size(); ++j) coords.emplace_back(a, j);
    }
  } else {
    std::mt19937_64 rng(options.seed);
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    for (std::size_t a = 0; a < params.size(); ++a) {
      const auto n = params[a].tensor->size();
      if (n == 0) continue;
      chosen.emplace(a, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    }
    // Flat index over all arrays for the remaining uniform draws.
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& p : params) {
      offsets.push_back(off);
      off += p.tensor->size();
    }
    std::uniform_int_distribution<std::size_t> flat(0, total - 1);
    while (chosen.size() < options.coordinates) {
      const auto idx = flat(rng);
      const auto a = static_cast<std::size_t>(
          std::upper_bound(offsets.begin(), offsets.end(), idx) - offsets.begin() - 1);
      chosen.emplace(a, idx - offsets[a]);
    }
    coords.assign(chosen.begin(), chosen.end());
  }

  GradCheckReport report;
  for (const auto& [a, j] : coords) {
    auto& w = params[a].tensor->values[j];
    const double saved = w;
    w = saved + options.step;
    const double up = objective();
    w = saved - options.step;
    const double down = objective();
    w = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double analytic = params[a].analytic->values[j];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    const double rel = std::abs(analytic - numeric) / denom;
    ++report.checked;
    if (rel > options.tolerance) {
      ++report.failed;
      report.largest_failing = std::max(report.largest_failing, denom);
    }
    if (rel > report.max_rel_err || report.worst_parameter.empty()) {
      if (rel >= report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_parameter = params[a].name;
        report.worst_index = j;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_err <= options.tolerance;
  return report;
}

GradCheckReport grad_check_against(const Network& net, const Array2D& window, double target,
                                   const LossConfig& loss_cfg, const Gradients& analytic,
                                   const GradCheckOptions& options) {
  Network probe = net;
  auto refs = param_refs(probe.params, analytic, probe.config.inputs);
  const auto objective = [&] {
    const auto tr = forward(probe, window);
    return window_data_loss(probe.config, tr, target) + penalty(probe.params, loss_cfg);
  };
  return check_gradients(refs, objective, options);
}

GradCheckReport grad_check(const Network& net, const Array2D& window, double target,
                           const LossConfig& loss_cfg, const GradCheckOptions& options) {
  const auto result = backward(net, window, target, loss_cfg);
  return grad_check_against(net, window, target, loss_cfg, result.gradients, options);
}

FitResult fit(Network net, const WindowBatch& batch, const OptimizerConfig& opt,
              const LossConfig& loss_cfg, const EpochCallback& on_epoch) {
  if (batch.windows.empty()) throw ContractError("cannot fit on an empty window batch");
  if (!(opt.learning_rate >= 0.0) || opt.iterations == 0 || opt.batch_size == 0) {
    throw ContractError("optimizer needs learning rate >= 0, iterations >= 1, batch size >= 1");
  }
  if (batch.columns != net.config.inputs) {
    throw ContractError("window columns do not match the network inputs");
  }
  for (const auto& w : batch.windows) {
    if (w.self_fed) throw ContractError("teacher forcing violated: window holds model outputs");
  }

  const auto n = batch.windows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opt.seed);

  FitResult result;
  Gradients acc = net.params.zeros_like();
  const std::size_t jobs = std::max<std::size_t>(1, opt.jobs);
  std::vector<Gradients> scratch(std::min(jobs, opt.batch_size) == 1 ? 1 : opt.batch_size,
                                 net.params.zeros_like());
  std::vector<double> losses(opt.batch_size);

  for (std::size_t epoch = 0; epoch < opt.iterations; ++epoch) {
    if (opt.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += opt.batch_size) {
      const auto end = std::min(n, start + opt.batch_size);
      const auto size = end - start;
      zero(acc);
      double data_loss = 0.0;
      try {
        if (scratch.size() == 1) {
          for (std::size_t i = start; i < end; ++i) {
            const auto& w = batch.windows[order[i]];
            const auto tr = forward(net, w.input);
            zero(scratch[0]);
            backward_data(net, w.input, tr, w.target, scratch[0]);
            accumulate(acc, scratch[0]);
            data_loss += window_data_loss(net.config, tr, w.target);
          }
        } else {
          parallel_for(size, jobs, [&](std::size_t i) {
            const auto& w = batch.windows[order[start + i]];
            const auto tr = forward(net, w.input);
            zero(scratch[i]);
            backward_data(net, w.input, tr, w.target, scratch[i]);
            losses[i] = window_data_loss(net.config, tr, w.target);
          });
          for (std::size_t i = 0; i < size; ++i) {
            accumulate(acc, scratch[i]);
            data_loss += losses[i];
          }
        }
      } catch (const NumericError& e) {
        throw DivergenceError(std::string("training diverged in epoch ") + std::to_string(epoch) +
                                  ": " + e.what(),
                              epoch);
      }
      const double inv = 1.0 / static_cast<double>(size);
      const double batch_loss = data_loss * inv + penalty(net.params, loss_cfg);
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("loss became non-finite in epoch " + std::to_string(epoch), epoch);
      }
      epoch_loss += batch_loss * static_cast<double>(size);

      const std::vector<InputColumn> none;
      acc.for_each(none, [inv](const std::string&, Tensor& t, bool) {
        for (auto& v : t.values) v *= inv;
      });
      add_penalty_gradient(net.params, loss_cfg, acc);
      std::vector<const Tensor*> grads;
      acc.for_each(none, [&](const std::string&, const Tensor& t, bool) { grads.push_back(&t); });
      std::size_t a = 0;
      net.params.for_each(none, [&](const std::string&, Tensor& t, bool) {
        const auto& g = grads[a++]->values;
        for (std::size_t j = 0; j < t.values.size(); ++j) t.values[j] -= opt.learning_rate * g[j];
      });
    }
    epoch_loss /= static_cast<double>(n);
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  result.network = std::move(net);
  return result;
}

std::vector<double> predict_iterative(const Network& net, const Normalizer& normalizer,
                                      const Panel& history, std::size_t horizon,
                                      const Array2D& future_features,
                                      const WindowInspector& inspect) {
  const auto lookback = net.config.lookback;
  const auto nf = history.schema.size();
  if (history.size() < lookback + 1) {
    throw SizeError("history needs at least lookback + 1 = " + std::to_string(lookback + 1) + " rows");
  }
  if (future_features.rows() < horizon || (horizon > 0 && future_features.cols() != nf)) {
    throw InputError("future exogenous features must cover all " + std::to_string(horizon) +
                     " forecast slots with " + std::to_string(nf) + " columns");
  }
  if (history.missing_count() != 0) throw ContractError("history has missing cells");

  const auto norm = normalizer.apply(history);
  const auto ncols = net.config.inputs.size();
  const std::size_t pickup_cols = history.pickups_input ? 1 : 0;
  if (ncols != nf + pickup_cols) throw ContractError("history schema does not match the network inputs");

  // Rolling buffer of normalized input rows, oldest first.
  std::vector<std::vector<double>> rows;
  const auto first = history.size() - lookback - 1;
  for (std::size_t t = first; t < history.size(); ++t) {
    std::vector<double> row(ncols);
    fill_input_row(norm, t, row);
    rows.push_back(std::move(row));
  }
  std::vector<bool> predicted(rows.size(), false);

  std::vector<double> out;
  out.reserve(horizon);
  const auto interval = std::chrono::minutes{history.grid.interval_minutes()};
  for (std::size_t h = 0; h < horizon; ++h) {
    Window w;
    w.input = Array2D(lookback + 1, ncols);
    for (std::size_t r = 0; r <= lookback; ++r) {
      std::copy(rows[r].begin(), rows[r].end(), w.input.row(r).begin());
      w.self_fed = w.self_fed || predicted[r];
    }
    w.target_time = history.grid.end() + interval * static_cast<std::int64_t>(h);
    w.first_time = w.target_time - interval * static_cast<std::int64_t>(lookback + 1);
    if (inspect) inspect(h, w);
    const double y_norm = predict(net, w.input);
    const double y = normalizer.denormalize_pickups(y_norm);
    out.push_back(y);

    std::vector<double> row(ncols);
    std::size_t c = 0;
    if (pickup_cols) row[c++] = normalizer.normalize_pickups(y);
    for (std::size_t f = 0; f < nf; ++f) {
      double v = future_features(h, f);
      if (history.schema[f].kind == FeatureKind::Continuous) v = normalizer.apply_value(history.schema[f].name, v);
      row[c++] = v;
    }
    rows.erase(rows.begin());
    rows.push_back(std::move(row));
    predicted.erase(predicted.begin());
    predicted.push_back(true);
  }
  return out;
}

}  // namespace ubernet
