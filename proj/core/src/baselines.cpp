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

#include "ubernet/baselines.hpp"

#include <Eigen/Dense>

#include "ubernet/error.hpp"

namespace ubernet {
namespace {

std::vector<std::size_t> resolve(const Panel& panel, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    const auto i = panel.schema.index_of(n);
    if (!i) throw SchemaError("ridge-ARX exogenous feature '" + n + "' is not in the panel");
    idx.push_back(*i);
  }
  return idx;
}

void fill_row(const Panel& panel, std::size_t t, std::size_t lags,
              const std::vector<std::size_t>& exog, double* row) {
  for (std::size_t l = 1; l <= lags; ++l) *row++ = panel.pickups[t - l];
  for (const auto f : exog) {
    if (panel.is_missing(t, f)) throw ContractError("ridge-ARX needs an imputed panel");
    *row++ = panel.value(t, f);
  }
}

}  // namespace

std::vector<double> seasonal_naive(std::span<const double> history, std::size_t period,
                                   std::size_t horizon) {
  if (period == 0) throw ContractError("seasonal period must be at least 1");
  if (history.size() < period) {
    throw ContractError("seasonal naive needs at least one full period of history");
  }
  std::vector<double> series(history.begin(), history.end());
  const auto n = series.size();
  for (std::size_t h = 0; h < horizon; ++h) series.push_back(series[n + h - period]);
  return {series.begin() + static_cast<std::ptrdiff_t>(n), series.end()};
}

std::vector<double> persistence(std::span<const double> history, std::size_t horizon) {
  if (history.empty()) throw ContractError("persistence needs a non-empty history");
  return std::vector<double>(horizon, history.back());
}

RidgeArxParams fit_ridge_arx(const Panel& panel, std::size_t begin, std::size_t end,
                             std::size_t lags, const std::vector<std::string>& exogenous,
                             double alpha) {
  if (!(alpha >= 0.0)) throw ContractError("ridge strength must be non-negative");
  if (end > panel.size() || begin > end) throw ContractError("ridge-ARX range outside the panel");
  const auto exog = resolve(panel, exogenous);
  const std::size_t m = lags + exog.size();
  const std::size_t rows = end - begin > lags ? end - begin - lags : 0;
  if (rows < m + 1) {
    throw ContractError("ridge-ARX needs at least " + std::to_string(m + 1) +
                        " training rows, got " + std::to_string(rows));
  }

  Eigen::MatrixXd X(rows, m);
  Eigen::VectorXd y(rows);
  std::vector<double> buf(m);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto t = begin + lags + r;
    fill_row(panel, t, lags, exog, buf.data());
    for (std::size_t c = 0; c < m; ++c) X(r, c) = buf[c];
    y(r) = panel.pickups[t];
  }

  RidgeArxParams p;
  p.lags = lags;
  p.exogenous = exogenous;
  p.alpha = alpha;
  const double y_mean = y.mean();
  if (m == 0) {
    p.intercept = y_mean;
    return p;
  }
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  X.rowwise() -= x_mean;
  y.array() -= y_mean;
  Eigen::MatrixXd A = X.transpose() * X;
  A.diagonal().array() += alpha;
  const Eigen::VectorXd b = X.transpose() * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < static_cast<Eigen::Index>(m)) {
    throw NumericError("ridge-ARX system is singular; use alpha > 0");
  }
  const Eigen::VectorXd beta = qr.solve(b);
  p.coefficients.assign(beta.data(), beta.data() + m);
  p.intercept = y_mean - x_mean.dot(beta);
  return p;
}

double predict_ridge_arx(const RidgeArxParams& params, const Panel& panel, std::size_t t) {
  if (t < params.lags || t >= panel.size()) {
    throw ContractError("ridge-ARX cannot predict slot " + std::to_string(t));
  }
  const auto exog = resolve(panel, params.exogenous);
  std::vector<double> row(params.coefficients.size());
  fill_row(panel, t, params.lags, exog, row.data());
  double y = params.intercept;
  for (std::size_t i = 0; i < row.size(); ++i) y += params.coefficients[i] * row[i];
  return y;
}

}  // namespace ubernet
