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
#include <string>
#include <vector>

#include "ubernet/eval.hpp"
#include "ubernet/panel.hpp"

namespace CLI {
class App;
}

namespace ubernet::cli {

// Every setting of a run. Each field is also a command-line flag and a
// config-file key of the same name.
struct RunConfig {
  // data
  std::string panel = "panel.csv";
  std::string pickups;
  std::string features;
  std::string schema;
  std::string adjacency;
  std::string region;
  std::string start;
  std::string end;
  int interval = 15;
  std::size_t fallback_slots = 0;

  // network
  std::size_t lookback = 16;
  std::size_t channels = 100;
  std::size_t column_width = 8;
  std::string dilations = "1,2";
  std::string head = "regression";
  std::size_t bins = 16;
  bool max_pool = false;

  // training
  double l2 = 1e-4;
  double l1 = 0.0;
  double learning_rate = 1e-3;
  std::size_t iterations = 100;
  std::size_t batch_size = 32;
  bool shuffle = true;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  // evaluation
  std::string model = "ubernet";
  std::string checkpoint;
  std::string split;
  double split_fraction = 0.8;
  std::size_t folds = 5;
  double min_train_fraction = 0.5;
  std::string feature_sets = "all";
  std::size_t importance_repeats = 5;
  std::string pdp_features;
  std::size_t pdp_points = 20;
  std::string breakdown_by = "hour";
  std::string residuals;

  // baselines
  std::size_t season_period = 0;
  std::size_t ridge_lags = 4;
  double ridge_alpha = 1e-3;
  std::string ridge_exogenous;

  // gradient check
  double gradcheck_step = 1e-5;
  double gradcheck_tolerance = 1e-4;
  std::size_t gradcheck_coordinates = 200;

  // synthetic panels
  std::size_t synth_slots = 2000;
  std::string synth_start = "2014-04-01T00:00";
  double synth_base = 100.0;
  double synth_diurnal = 30.0;
  int synth_peak_hour = 18;
  double synth_weekly = -15.0;
  double synth_noise = 5.0;
  std::string synth_drivers = "g:20:0.95:A";
  std::size_t synth_driver_lag = 1;
  bool synth_calendar = true;

  std::string out = "out";

  // Registers every field as a flag on `app`.
  void bind(CLI::App& app);
  // Throws ContractError describing the first invalid setting.
  void validate() const;
  // `key = value` lines, one per setting, in declaration order.
  std::string echo() const;

  std::vector<std::size_t> dilation_list() const;
  std::vector<std::string> feature_set_list() const;
  std::vector<std::string> pdp_feature_list() const;
  std::vector<std::string> ridge_exogenous_list() const;
  SynthConfig synth_config() const;
  UbernetSettings ubernet_settings() const;
  HarnessOptions harness_options() const;
  // Seasonal period in slots (one day when season_period is 0).
  std::size_t season_slots() const;
  // First test slot of `panel` according to `split` / `split_fraction`.
  std::size_t split_slot(const Panel& panel) const;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',');

// Forecaster factory for `config.model` (ubernet, seasonal_naive,
// persistence, ridge_arx, oracle, zero).
ForecasterFactory make_factory(const RunConfig& config);

}  // namespace ubernet::cli
