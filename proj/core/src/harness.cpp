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
#include <limits>

#include "ubernet/error.hpp"
#include "ubernet/eval.hpp"
#include "ubernet/parallel.hpp"

namespace ubernet {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Outcome {
  EvalReport report;
  std::vector<ResidualRecord> residuals;
};

EvalReport failed_report(std::string model, std::string slice, const std::string& why) {
  EvalReport r;
  r.model = std::move(model);
  r.slice = std::move(slice);
  r.rmse = kNaN;
  r.smape = kNaN;
  r.failed = true;
  r.note = why;
  return r;
}

// Fits a fresh model on [0, train_end) and scores [test_begin, test_end).
// Numeric failures (divergence included) become a failed report.
Outcome run_one(const Panel& panel, const ForecasterFactory& factory, std::uint64_t seed,
                std::size_t train_end, std::size_t test_begin, std::size_t test_end,
                const std::string& slice) {
  auto model = factory(seed);
  Outcome out;
  const Panel visible = panel.slice(0, test_end);
  std::vector<double> forecasts;
  try {
    model->fit(visible, train_end);
    forecasts = model->predict(visible, test_begin, test_end);
  } catch (const NumericError& e) {
    out.report = failed_report(model->name(), slice, e.what());
    return out;
  }
  std::vector<double> actuals(panel.pickups.begin() + static_cast<std::ptrdiff_t>(test_begin),
                              panel.pickups.begin() + static_cast<std::ptrdiff_t>(test_end));
  for (auto& f : forecasts) f = std::max(0.0, f);
  out.report = make_report(model->name(), slice, forecasts, actuals);
  const auto region = panel.scope.label();
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    out.residuals.push_back({panel.time(test_begin + i), region, forecasts[i], actuals[i]});
  }
  return out;
}

}  // namespace

CvResult rolling_cv(const Panel& panel, const ForecasterFactory& factory, const FoldPlan& plan,
                    const HarnessOptions& options) {
  if (plan.folds.empty()) throw PlanningError("fold plan is empty");
  for (const auto& f : plan.folds) {
    if (!(f.train_begin < f.train_end && f.train_end <= f.test_begin &&
          f.test_begin < f.test_end && f.test_end <= panel.size())) {
      throw PlanningError("fold plan does not fit the panel grid");
    }
  }
  std::vector<Outcome> outcomes(plan.folds.size());
  parallel_for(plan.folds.size(), options.jobs, [&](std::size_t i) {
    const auto& f = plan.folds[i];
    const auto seed = derive_seed(options.seed, "fold/" + std::to_string(i));
    outcomes[i] = run_one(panel.slice(f.train_begin, f.test_end), factory, seed,
                          f.train_end - f.train_begin, f.test_begin - f.train_begin,
                          f.test_end - f.train_begin, std::to_string(i + 1));
  });

  CvResult result;
  std::vector<double> forecasts;
  std::vector<double> actuals;
  std::size_t failed = 0;
  for (auto& o : outcomes) {
    failed += o.report.failed ? 1 : 0;
    result.folds.push_back(o.report);
    for (const auto& r : o.residuals) {
      forecasts.push_back(r.forecast);
      actuals.push_back(r.actual);
    }
    result.residuals.insert(result.residuals.end(), o.residuals.begin(), o.residuals.end());
  }
  const auto name = result.folds.front().model;
  if (forecasts.empty()) {
    result.pooled = failed_report(name, "pooled", "every fold failed");
  } else {
    result.pooled = make_report(name, "pooled", forecasts, actuals);
    if (failed) {
      result.pooled.failed = true;
      result.pooled.note = std::to_string(failed) + " of " + std::to_string(plan.folds.size()) +
                           " folds failed; pooled over the rest";
    }
  }
  return result;
}

SplitResult evaluate_split(const Panel& panel, const ForecasterFactory& factory,
                           std::size_t split, const HarnessOptions& options) {
  if (split == 0 || split >= panel.size()) {
    throw RangeError("split must leave both a train and a test range");
  }
  auto o = run_one(panel, factory, options.seed, split, split, panel.size(), "test");
  return {std::move(o.report), std::move(o.residuals)};
}

std::vector<EvalReport> evaluate_feature_sets(const Panel& panel,
                                              const ForecasterFactory& factory,
                                              const std::vector<std::string>& sets,
                                              std::size_t split, const HarnessOptions& options) {
  std::vector<Panel> panels;
  for (const auto& set : sets) {
    if (set == "all") {
      panels.push_back(panel);
      continue;
    }
    const auto wanted = feature_set_from(set);
    std::vector<std::string> names;
    for (const auto& f : panel.schema.features()) {
      if (f.set == wanted) names.push_back(f.name);
    }
    if (names.empty()) throw ContractError("feature set " + set + " has no features in the panel");
    panels.push_back(panel.select_features(names));
  }
  std::vector<EvalReport> rows(sets.size());
  parallel_for(sets.size(), options.jobs, [&](std::size_t i) {
    rows[i] = evaluate_split(panels[i], factory, split, options).report;
    rows[i].slice = sets[i];
  });
  return rows;
}

AblationResult ablate_one_by_one(const Panel& panel, const ForecasterFactory& factory,
                                 std::size_t split, const HarnessOptions& options) {
  if (panel.schema.size() + (panel.pickups_input ? 1 : 0) < 2) {
    throw ContractError("ablation needs at least two input features");
  }
  std::vector<std::string> names;
  std::vector<Panel> variants;
  if (panel.pickups_input) {
    Panel p = panel;
    p.pickups_input = false;
    names.emplace_back(Normalizer::kPickups);
    variants.push_back(std::move(p));
  }
  for (const auto& f : panel.schema.features()) {
    names.push_back(f.name);
    variants.push_back(panel.without_feature(f.name));
  }

  AblationResult result;
  result.full = evaluate_split(panel, factory, split, options).report;
  result.full.slice = "full";
  result.rows.resize(variants.size());
  parallel_for(variants.size(), options.jobs, [&](std::size_t i) {
    auto& row = result.rows[i];
    row.feature = names[i];
    row.report = evaluate_split(variants[i], factory, split, options).report;
    row.report.slice = names[i];
    row.delta_rmse = row.report.rmse - result.full.rmse;
  });
  return result;
}

}  // namespace ubernet
