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
#include <map>
#include <numeric>
#include <random>

#include "ubernet/error.hpp"
#include "ubernet/eval.hpp"
#include "ubernet/parallel.hpp"

namespace ubernet {
namespace {

std::vector<double> predict_all(const Network& net, const Normalizer& normalizer,
                                const std::vector<Window>& windows) {
  std::vector<double> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    out.push_back(std::max(0.0, normalizer.denormalize_pickups(predict(net, w.input))));
  }
  return out;
}

std::size_t column_of(const Network& net, const std::string& feature) {
  const auto& in = net.config.inputs;
  for (std::size_t c = 0; c < in.size(); ++c) {
    if (in[c].name == feature) return c;
  }
  throw SchemaError("feature '" + feature + "' is not an input of the network");
}

}  // namespace

std::vector<ImportanceRow> permutation_importance(const Network& net, const Normalizer& normalizer,
                                                  const WindowBatch& windows, std::uint64_t seed,
                                                  std::size_t repeats, std::size_t jobs) {
  if (repeats == 0) throw ContractError("permutation importance needs at least one repeat");
  if (windows.windows.empty()) throw ContractError("permutation importance needs test windows");
  if (windows.columns != net.config.inputs) {
    throw CompatibilityError("window columns do not match the network inputs");
  }
  std::vector<double> actuals;
  for (const auto& w : windows.windows) actuals.push_back(normalizer.denormalize_pickups(w.target));
  const double base = rmse(predict_all(net, normalizer, windows.windows), actuals);

  const auto ncols = net.config.inputs.size();
  const auto n = windows.windows.size();
  std::vector<double> deltas(ncols * repeats);
  parallel_for(ncols * repeats, jobs, [&](std::size_t job) {
    const auto c = job / repeats;
    const auto r = job % repeats;
    const auto& name = net.config.inputs[c].name;
    std::mt19937_64 rng(derive_seed(seed, "importance/" + name + "/" + std::to_string(r)));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto shuffled = windows.windows;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& src = windows.windows[perm[i]].input;
      auto& dst = shuffled[i].input;
      for (std::size_t row = 0; row < dst.rows(); ++row) dst(row, c) = src(row, c);
    }
    deltas[job] = std::abs(rmse(predict_all(net, normalizer, shuffled), actuals) - base);
  });

  std::vector<ImportanceRow> rows;
  for (std::size_t c = 0; c < ncols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) sum += deltas[c * repeats + r];
    rows.push_back({net.config.inputs[c].name, sum / static_cast<double>(repeats), 0});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ImportanceRow& a, const ImportanceRow& b) { return a.importance > b.importance; });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
  return rows;
}

std::vector<double> pdp_grid(const Panel& panel, const std::string& feature, std::size_t begin,
                             std::size_t end, std::size_t points) {
  if (points < 2) throw ContractError("partial dependence needs at least 2 grid points");
  if (begin >= end || end > panel.size()) throw ContractError("grid range outside the panel");
  std::vector<double> values;
  if (feature == Normalizer::kPickups) {
    values.assign(panel.pickups.begin() + static_cast<std::ptrdiff_t>(begin),
                  panel.pickups.begin() + static_cast<std::ptrdiff_t>(end));
  } else {
    const auto f = panel.schema.index_of(feature);
    if (!f) throw SchemaError("feature '" + feature + "' is not in the panel");
    if (panel.schema[*f].kind == FeatureKind::Categorical) {
      throw ContractError("partial dependence is defined for continuous features only; '" +
                          feature + "' is categorical");
    }
    for (std::size_t t = begin; t < end; ++t) {
      if (!panel.is_missing(t, *f)) values.push_back(panel.value(t, *f));
    }
  }
  if (values.empty()) throw ContractError("feature '" + feature + "' has no observed values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> grid;
  for (std::size_t i = 0; i < points; ++i) {
    grid.push_back(*lo + (*hi - *lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return grid;
}

std::vector<std::pair<double, double>> partial_dependence(const Network& net,
                                                          const Normalizer& normalizer,
                                                          const WindowBatch& windows,
                                                          const std::string& feature,
                                                          const std::vector<double>& grid) {
  const auto c = column_of(net, feature);
  if (net.config.inputs[c].kind == FeatureKind::Categorical) {
    throw ContractError("partial dependence is defined for continuous features only; '" +
                        feature + "' is categorical");
  }
  if (grid.size() < 2) throw ContractError("partial dependence needs at least 2 grid points");
  if (windows.windows.empty()) throw ContractError("partial dependence needs windows");
  std::vector<std::pair<double, double>> curve;
  auto work = windows.windows;
  for (const double v : grid) {
    const double z = normalizer.apply_value(feature, v);
    double sum = 0.0;
    for (auto& w : work) {
      for (std::size_t row = 0; row < w.input.rows(); ++row) w.input(row, c) = z;
      sum += normalizer.denormalize_pickups(predict(net, w.input));
    }
    curve.emplace_back(v, sum / static_cast<double>(work.size()));
  }
  return curve;
}

std::vector<EvalReport> error_breakdown(const std::vector<ResidualRecord>& records,
                                        BreakdownKey by, const std::string& model) {
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_hour;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_region;
  for (const auto& r : records) {
    auto& g = by == BreakdownKey::Hour ? by_hour[hour_of_day(r.time)] : by_region[r.region];
    g.first.push_back(r.forecast);
    g.second.push_back(r.actual);
  }
  std::vector<EvalReport> out;
  if (by == BreakdownKey::Hour) {
    for (const auto& [h, g] : by_hour) out.push_back(make_report(model, std::to_string(h), g.first, g.second));
  } else {
    for (const auto& [k, g] : by_region) out.push_back(make_report(model, k, g.first, g.second));
  }
  return out;
}

}  // namespace ubernet
