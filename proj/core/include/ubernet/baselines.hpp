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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ubernet/panel.hpp"

namespace ubernet {

// prediction(t + h) = history(t + h - period); beyond one period the
// forecaster reads its own earlier outputs.
std::vector<double> seasonal_naive(std::span<const double> history, std::size_t period,
                                   std::size_t horizon);

// Repeats the last observation.
std::vector<double> persistence(std::span<const double> history, std::size_t horizon);

struct RidgeArxParams {
  std::size_t lags = 0;
  std::vector<std::string> exogenous;
  double alpha = 0.0;
  // lags first (p(t-1), ..., p(t-lags)), then exogenous values at t.
  std::vector<double> coefficients;
  double intercept = 0.0;
};

// Ridge regression of p(t) on its own lags and the current exogenous
// values, over targets t in [begin + lags, end). The intercept is left
// unpenalized by centering. NumericError when alpha = 0 and the system is
// singular.
RidgeArxParams fit_ridge_arx(const Panel& panel, std::size_t begin, std::size_t end,
                             std::size_t lags, const std::vector<std::string>& exogenous,
                             double alpha);

// One-step prediction of slot t from observed p(t-1..t-lags) and x(t).
double predict_ridge_arx(const RidgeArxParams& params, const Panel& panel, std::size_t t);

}  // namespace ubernet
