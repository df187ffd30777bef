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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ubernet/baselines.hpp"
#include "ubernet/net.hpp"
#include "ubernet/panel.hpp"
#include "ubernet/train.hpp"

namespace ubernet {

// A model under evaluation. Every forecaster is judged on teacher-forced
// one-step predictions: the forecast for slot t may use observed pickups
// before t and exogenous values known at t.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  // Fit on slots [0, train_end).
  virtual void fit(const Panel& panel, std::size_t train_end) = 0;
  // Predictions (pickup units) for slots [begin, end).
  virtual std::vector<double> predict(const Panel& panel, std::size_t begin,
                                      std::size_t end) const = 0;
};

using ForecasterFactory = std::function<std::unique_ptr<Forecaster>(std::uint64_t seed)>;

struct UbernetSettings {
  // `inputs` is ignored; it is resolved from the data at fit time.
  NetworkConfig network;
  // Softmax head only: number of equal-frequency bins over train targets.
  std::size_t bins = 16;
  OptimizerConfig optimizer;
  LossConfig loss;
};

class UbernetForecaster : public Forecaster {
 public:
  UbernetForecaster(UbernetSettings settings, std::uint64_t seed);
  // Wraps an already trained network.
  UbernetForecaster(Network network, Normalizer normalizer);

  std::string name() const override { return "ubernet"; }
  void fit(const Panel& panel, std::size_t train_end) override;
  std::vector<double> predict(const Panel& panel, std::size_t begin,
                              std::size_t end) const override;

  const Network& network() const;
  const Normalizer& normalizer() const { return normalizer_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  std::uint64_t seed() const { return seed_; }

  void set_epoch_callback(EpochCallback cb) { on_epoch_ = std::move(cb); }

 private:
  UbernetSettings settings_;
  std::uint64_t seed_ = 0;
  std::optional<Network> network_;
  Normalizer normalizer_;
  std::vector<double> loss_history_;
  EpochCallback on_epoch_;
};

class SeasonalNaiveForecaster : public Forecaster {
 public:
  explicit SeasonalNaiveForecaster(std::size_t period) : period_(period) {}
  std::string name() const override { return "seasonal_naive"; }
  void fit(const Panel&, std::size_t) override {}
  std::vector<double> predict(const Panel& panel, std::size_t begin,
                              std::size_t end) const override;

 private:
  std::size_t period_;
};

class PersistenceForecaster : public Forecaster {
 public:
  std::string name() const override { return "persistence"; }
  void fit(const Panel&, std::size_t) override {}
  std::vector<double> predict(const Panel& panel, std::size_t begin,
                              std::size_t end) const override;
};

class RidgeArxForecaster : public Forecaster {
 public:
  // Empty `exogenous` means every feature of the panel.
  RidgeArxForecaster(std::size_t lags, std::vector<std::string> exogenous, double alpha);
  std::string name() const override { return "ridge_arx"; }
  void fit(const Panel& panel, std::size_t train_end) override;
  std::vector<double> predict(const Panel& panel, std::size_t begin,
                              std::size_t end) const override;
  const RidgeArxParams& params() const { return params_; }

 private:
  std::size_t lags_;
  std::vector<std::string> exogenous_;
  double alpha_;
  RidgeArxParams params_;
};

// Returns the actuals; the harness's zero-error reference.
class OracleForecaster : public Forecaster {
 public:
  std::string name() const override { return "oracle"; }
  void fit(const Panel&, std::size_t) override {}
  std::vector<double> predict(const Panel& panel, std::size_t begin,
                              std::size_t end) const override;
};

class ConstantForecaster : public Forecaster {
 public:
  explicit ConstantForecaster(double value) : value_(value) {}
  std::string name() const override { return "constant"; }
  void fit(const Panel&, std::size_t) override {}
  std::vector<double> predict(const Panel&, std::size_t begin, std::size_t end) const override {
    return std::vector<double>(end - begin, value_);
  }

 private:
  double value_;
};

}  // namespace ubernet
