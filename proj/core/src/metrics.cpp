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

#include "ubernet/error.hpp"
#include "ubernet/eval.hpp"

namespace ubernet {
namespace {

void check_pair(std::span<const double> f, std::span<const double> a) {
  if (f.empty() || f.size() != a.size()) {
    throw ContractError("metrics need equal, non-zero lengths (got " + std::to_string(f.size()) +
                        " forecasts and " + std::to_string(a.size()) + " actuals)");
  }
}

}  // namespace

double rmse(std::span<const double> forecasts, std::span<const double> actuals) {
  check_pair(forecasts, actuals);
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double e = forecasts[i] - actuals[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(forecasts.size()));
}

double smape(std::span<const double> forecasts, std::span<const double> actuals) {
  check_pair(forecasts, actuals);
  double sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double f = forecasts[i];
    const double a = actuals[i];
    if (f < 0.0 || a < 0.0) throw ContractError("smape needs non-negative values");
    const double denom = 0.5 * (f + a);
    if (denom > 0.0) sum += std::abs(f - a) / denom;
  }
  return 100.0 * sum / static_cast<double>(forecasts.size());
}

EvalReport make_report(std::string model, std::string slice, std::span<const double> forecasts,
                       std::span<const double> actuals) {
  EvalReport r;
  r.model = std::move(model);
  r.slice = std::move(slice);
  r.rmse = rmse(forecasts, actuals);
  r.smape = smape(forecasts, actuals);
  r.n = forecasts.size();
  return r;
}

FoldPlan make_fold_plan(std::size_t slots, std::size_t folds, double min_train_fraction) {
  if (folds < 2) throw PlanningError("rolling cross-validation needs at least 2 folds");
  if (!(min_train_fraction >= 0.0 && min_train_fraction < 1.0)) {
    throw PlanningError("min_train_fraction must lie in [0, 1)");
  }
  const auto reserved =
      static_cast<std::size_t>(std::floor(static_cast<double>(slots) * min_train_fraction));
  const std::size_t block = (slots - reserved) / folds;
  if (block == 0) {
    throw PlanningError(std::to_string(slots) + " slots leave no room for " +
                        std::to_string(folds) + " test blocks");
  }
  const std::size_t train0 = slots - folds * block;
  if (train0 < 1) throw PlanningError("the first fold would have no training data");
  FoldPlan plan;
  for (std::size_t i = 0; i < folds; ++i) {
    const auto test_begin = train0 + i * block;
    plan.folds.push_back({0, test_begin, test_begin, test_begin + block});
  }
  return plan;
}

FoldPlan make_fold_plan(const TimeGrid& grid, std::size_t folds, double min_train_fraction) {
  return make_fold_plan(grid.slots(), folds, min_train_fraction);
}

}  // namespace ubernet
