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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ubernet/forecasters.hpp"
#include "ubernet/net.hpp"
#include "ubernet/panel.hpp"
#include "ubernet/time.hpp"

namespace ubernet {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// sqrt(mean squared error). ContractError on empty or mismatched inputs.
double rmse(std::span<const double> forecasts, std::span<const double> actuals);

// Percent: (100 / n) sum |F - A| / ((F + A) / 2); a 0/0 term counts as 0.
// ContractError on negative values.
double smape(std::span<const double> forecasts, std::span<const double> actuals);

struct EvalReport {
  std::string model;
  std::string slice;
  double rmse = 0.0;
  double smape = 0.0;
  std::size_t n = 0;
  bool failed = false;
  std::string note;
};

EvalReport make_report(std::string model, std::string slice, std::span<const double> forecasts,
                       std::span<const double> actuals);

// ---------------------------------------------------------------------------
// Fold plans
// ---------------------------------------------------------------------------

// Half-open slot ranges.
struct Fold {
  std::size_t train_begin = 0;
  std::size_t train_end = 0;
  std::size_t test_begin = 0;
  std::size_t test_end = 0;
  bool operator==(const Fold&) const = default;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

// Expanding window: the slots after the first min_train_fraction are cut
// into `folds` equal test blocks (any remainder joins the first train set);
// fold i trains on everything before block i. PlanningError if infeasible.
FoldPlan make_fold_plan(std::size_t slots, std::size_t folds, double min_train_fraction);
FoldPlan make_fold_plan(const TimeGrid& grid, std::size_t folds, double min_train_fraction);

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

struct HarnessOptions {
  std::string model = "ubernet";
  std::uint64_t seed = 0;
  // Independent jobs (folds, ablation rows, importance repeats) in flight.
  std::size_t jobs = 1;
};

struct ResidualRecord {
  TimePoint time;
  std::string region;
  double forecast = 0.0;
  double actual = 0.0;
};

struct CvResult {
  std::vector<EvalReport> folds;
  // Over the concatenated residuals of the folds that completed.
  EvalReport pooled;
  std::vector<ResidualRecord> residuals;
};

// Forecasts are clamped at zero before scoring.
CvResult rolling_cv(const Panel& panel, const ForecasterFactory& factory, const FoldPlan& plan,
                    const HarnessOptions& options);

struct SplitResult {
  EvalReport report;
  std::vector<ResidualRecord> residuals;
};

// Fit on [0, split), score one-step forecasts on [split, size).
SplitResult evaluate_split(const Panel& panel, const ForecasterFactory& factory,
                           std::size_t split, const HarnessOptions& options);

// Rows keyed "A".."D" or "all"; the pickups column is always an input.
std::vector<EvalReport> evaluate_feature_sets(const Panel& panel,
                                              const ForecasterFactory& factory,
                                              const std::vector<std::string>& sets,
                                              std::size_t split, const HarnessOptions& options);

struct AblationRow {
  // "p" is the pickups row: pickups dropped from the inputs, kept as target.
  std::string feature;
  EvalReport report;
  // report.rmse minus the full-feature RMSE.
  double delta_rmse = 0.0;
};

struct AblationResult {
  EvalReport full;
  std::vector<AblationRow> rows;
};

AblationResult ablate_one_by_one(const Panel& panel, const ForecasterFactory& factory,
                                 std::size_t split, const HarnessOptions& options);

// ---------------------------------------------------------------------------
// Analysis of a trained network
// ---------------------------------------------------------------------------

struct ImportanceRow {
  std::string feature;
  double importance = 0.0;
  std::size_t rank = 0;  // 1 = most important
};

// Mean |RMSE(shuffled) - RMSE(base)| per input column, shuffling that
// column across windows. `windows` are normalized (model space); RMSE is in
// pickup units. Sorted by descending importance.
std::vector<ImportanceRow> permutation_importance(const Network& net, const Normalizer& normalizer,
                                                  const WindowBatch& windows, std::uint64_t seed,
                                                  std::size_t repeats, std::size_t jobs = 1);

// Evenly spaced raw values from the feature's minimum to maximum over
// slots [begin, end).
std::vector<double> pdp_grid(const Panel& panel, const std::string& feature, std::size_t begin,
                             std::size_t end, std::size_t points);

// (raw value, mean prediction in pickup units) per grid value; the feature
// is overwritten in every row of every window. ContractError for
// categorical features.
std::vector<std::pair<double, double>> partial_dependence(const Network& net,
                                                          const Normalizer& normalizer,
                                                          const WindowBatch& windows,
                                                          const std::string& feature,
                                                          const std::vector<double>& grid);

enum class BreakdownKey { Hour, Region };

// One report per non-empty group, in key order (hours numerically).
std::vector<EvalReport> error_breakdown(const std::vector<ResidualRecord>& records,
                                        BreakdownKey by, const std::string& model = "");

}  // namespace ubernet
