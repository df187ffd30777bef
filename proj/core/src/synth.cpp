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

#include <cmath>
#include <numbers>
#include <random>

#include "ubernet/error.hpp"
#include "ubernet/panel.hpp"

namespace ubernet {

double synth_mean(const SynthConfig& config, TimePoint t, std::span<const double> driver_values) {
  const double minute_of_day = static_cast<double>(
      (t - std::chrono::floor<std::chrono::days>(t)).count());
  const double hour = minute_of_day / 60.0;
  const int dow = day_of_week(t);
  const bool weekend = dow == 0 || dow == 6;
  double mean = config.base +
                config.diurnal_amplitude *
                    std::cos(2.0 * std::numbers::pi * (hour - config.peak_hour) / 24.0) +
                (weekend ? config.weekly_amplitude : 0.0);
  for (std::size_t d = 0; d < config.drivers.size(); ++d) {
    mean += config.drivers[d].weight * driver_values[d];
  }
  return mean;
}

Panel synth_panel(const SynthConfig& config) {
  if (config.slots == 0) throw ContractError("synthetic panel needs at least one slot");
  for (const auto& d : config.drivers) {
    if (!(std::abs(d.persistence) < 1.0)) {
      throw ContractError("driver '" + d.name + "' persistence must lie in (-1, 1)");
    }
  }
  std::vector<FeatureSpec> specs;
  if (config.calendar_features) {
    specs.push_back({"hour", FeatureSet::A, FeatureKind::Categorical, Spatial::Independent, 24});
    specs.push_back({"day", FeatureSet::A, FeatureKind::Categorical, Spatial::Independent, 7});
    specs.push_back({"wed", FeatureSet::A, FeatureKind::Categorical, Spatial::Independent, 2});
  }
  for (const auto& d : config.drivers) {
    specs.push_back({d.name, d.set, FeatureKind::Continuous,
                     d.set == FeatureSet::A ? Spatial::Independent : Spatial::Dependent, 0});
  }

  Panel panel;
  panel.grid = TimeGrid::with_slots(config.start, config.slots, config.interval_minutes);
  panel.schema = FeatureSchema(std::move(specs));
  const auto nf = panel.schema.size();
  panel.pickups.resize(config.slots);
  panel.values.resize(config.slots * nf);
  panel.missing.assign(config.slots * nf, 0);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Driver paths first (stationary, unit variance), then the noise draws.
  std::vector<std::vector<double>> paths(config.slots, std::vector<double>(config.drivers.size()));
  for (std::size_t t = 0; t < config.slots; ++t) {
    for (std::size_t d = 0; d < config.drivers.size(); ++d) {
      const double phi = config.drivers[d].persistence;
      paths[t][d] = t == 0 ? normal(rng)
                           : phi * paths[t - 1][d] + std::sqrt(1.0 - phi * phi) * normal(rng);
    }
  }

  for (std::size_t t = 0; t < config.slots; ++t) {
    const auto time = panel.time(t);
    const auto& acting = paths[t >= config.driver_lag ? t - config.driver_lag : 0];
    const double noise = config.noise_sigma * normal(rng);
    const double level = synth_mean(config, time, acting) + noise;
    panel.pickups[t] = std::round(std::max(0.0, level));

    std::size_t f = 0;
    if (config.calendar_features) {
      const int dow = day_of_week(time);
      panel.value(t, f++) = hour_of_day(time);
      panel.value(t, f++) = dow;
      panel.value(t, f++) = (dow == 0 || dow == 6) ? 1.0 : 0.0;
    }
    for (double g : paths[t]) panel.value(t, f++) = g;
  }
  return panel;
}

}  // namespace ubernet
