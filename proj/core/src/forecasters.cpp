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

#include "ubernet/forecasters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ubernet/error.hpp"
#include "ubernet/parallel.hpp"

namespace ubernet {
namespace {

void check_range(const Panel& panel, std::size_t begin, std::size_t end, std::size_t warmup,
                 const std::string& who) {
  if (begin > end || end > panel.size()) {
    throw ContractError(who + ": prediction range outside the panel");
  }
  if (begin < end && begin < warmup) {
    throw SizeError(who + " needs " + std::to_string(warmup) +
                    " slots of history before the first forecast, got " + std::to_string(begin));
  }
}

// Equal-frequency bins over sorted targets; each bin's value is the mean of
// the targets it holds.
void make_bins(std::vector<double> targets, std::size_t bins, NetworkConfig& config) {
  std::sort(targets.begin(), targets.end());
  bins = std::max<std::size_t>(1, std::min(bins, targets.size()));
  std::vector<std::size_t> cut;
  for (std::size_t b = 0; b <= bins; ++b) cut.push_back(b * targets.size() / bins);
  config.bin_edges.clear();
  config.bin_values.clear();
  for (std::size_t b = 0; b <= bins; ++b) {
    double edge = b == bins ? targets.back() : targets[cut[b]];
    if (!config.bin_edges.empty() && edge <= config.bin_edges.back()) {
      edge = std::nextafter(config.bin_edges.back(), std::numeric_limits<double>::infinity());
    }
    config.bin_edges.push_back(edge);
  }
  for (std::size_t b = 0; b < bins; ++b) {
    double sum = 0.0;
    for (std::size_t i = cut[b]; i < cut[b + 1]; ++i) sum += targets[i];
    const auto count = cut[b + 1] - cut[b];
    config.bin_values.push_back(count ? sum / static_cast<double>(count)
                                      : 0.5 * (config.bin_edges[b] + config.bin_edges[b + 1]));
  }
}

}  // namespace

UbernetForecaster::UbernetForecaster(UbernetSettings settings, std::uint64_t seed)
    : settings_(std::move(settings)), seed_(seed) {}

UbernetForecaster::UbernetForecaster(Network network, Normalizer normalizer)
    : network_(std::move(network)), normalizer_(std::move(normalizer)) {
  settings_.network = network_->config;
}

const Network& UbernetForecaster::network() const {
  if (!network_) throw ContractError("ubernet forecaster has not been fitted");
  return *network_;
}

void UbernetForecaster::fit(const Panel& data, std::size_t train_end) {
  if (train_end > data.size()) throw ContractError("training range outside the panel");
  // Inferred categorical sizes come from the whole panel so that later
  // slices agree with the trained input layout.
  Panel panel = data;
  panel.schema = resolve_cardinalities(data);

  normalizer_ = Normalizer::fit(panel, 0, train_end);
  const auto train = normalizer_.apply(panel.slice(0, train_end));
  const auto lookback = settings_.network.lookback;
  const auto batch = build_windows(train, lookback);

  NetworkConfig config = settings_.network;
  config.inputs = input_columns(panel);
  if (config.head == HeadKind::Softmax) {
    std::vector<double> targets;
    for (const auto& w : batch.windows) targets.push_back(w.target);
    make_bins(std::move(targets), settings_.bins, config);
  }
  auto opt = settings_.optimizer;
  opt.seed = derive_seed(seed_, "shuffle");
  auto result = ubernet::fit(init_params(config, seed_), batch, opt, settings_.loss, on_epoch_);
  network_ = std::move(result.network);
  loss_history_ = std::move(result.loss_history);
}

std::vector<double> UbernetForecaster::predict(const Panel& data, std::size_t begin,
                                               std::size_t end) const {
  const auto& net = network();
  const auto lookback = net.config.lookback;
  check_range(data, begin, end, lookback + 1, "ubernet");
  if (begin == end) return {};
  Panel panel = data.slice(begin - lookback - 1, end);
  panel.schema = resolve_cardinalities(data);
  const auto norm = normalizer_.apply(panel);
  const auto batch = build_windows(norm, lookback);
  if (batch.columns != net.config.inputs) {
    throw CompatibilityError("panel columns do not match the trained network inputs");
  }
  std::vector<double> out(batch.size());
  parallel_for(batch.size(), settings_.optimizer.jobs, [&](std::size_t i) {
    out[i] = normalizer_.denormalize_pickups(ubernet::predict(net, batch.windows[i].input));
  });
  return out;
}

std::vector<double> SeasonalNaiveForecaster::predict(const Panel& panel, std::size_t begin,
                                                     std::size_t end) const {
  if (period_ == 0) throw ContractError("seasonal period must be at least 1");
  check_range(panel, begin, end, period_, "seasonal naive");
  std::vector<double> out;
  for (std::size_t t = begin; t < end; ++t) out.push_back(panel.pickups[t - period_]);
  return out;
}

std::vector<double> PersistenceForecaster::predict(const Panel& panel, std::size_t begin,
                                                   std::size_t end) const {
  check_range(panel, begin, end, 1, "persistence");
  std::vector<double> out;
  for (std::size_t t = begin; t < end; ++t) out.push_back(panel.pickups[t - 1]);
  return out;
}

RidgeArxForecaster::RidgeArxForecaster(std::size_t lags, std::vector<std::string> exogenous,
                                       double alpha)
    : lags_(lags), exogenous_(std::move(exogenous)), alpha_(alpha) {}

void RidgeArxForecaster::fit(const Panel& panel, std::size_t train_end) {
  auto exog = exogenous_;
  if (exog.empty()) {
    for (const auto& f : panel.schema.features()) exog.push_back(f.name);
  }
  params_ = fit_ridge_arx(panel, 0, train_end, lags_, exog, alpha_);
}

std::vector<double> RidgeArxForecaster::predict(const Panel& panel, std::size_t begin,
                                                std::size_t end) const {
  check_range(panel, begin, end, lags_, "ridge-ARX");
  std::vector<double> out;
  for (std::size_t t = begin; t < end; ++t) out.push_back(predict_ridge_arx(params_, panel, t));
  return out;
}

std::vector<double> OracleForecaster::predict(const Panel& panel, std::size_t begin,
                                              std::size_t end) const {
  check_range(panel, begin, end, 0, "oracle");
  return {panel.pickups.begin() + static_cast<std::ptrdiff_t>(begin),
          panel.pickups.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace ubernet
