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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ubernet/baselines.hpp"
#include "ubernet/error.hpp"
#include "ubernet/forecasters.hpp"

namespace ubernet {
namespace {

TEST(SeasonalNaive, IndexArithmetic) {
  const std::vector<double> h{1, 2, 3, 4};
  EXPECT_EQ(seasonal_naive(h, 2, 2), (std::vector<double>{3, 4}));
  EXPECT_EQ(seasonal_naive(h, 2, 5), (std::vector<double>{3, 4, 3, 4, 3}));
  EXPECT_EQ(seasonal_naive(h, 1, 3), persistence(h, 3));
  EXPECT_EQ(seasonal_naive(std::vector<double>(6, 2.5), 3, 4), std::vector<double>(4, 2.5));
  EXPECT_THROW(seasonal_naive(h, 5, 1), ContractError);
}

TEST(Persistence, RepeatsLast) {
  const std::vector<double> h{4, 9, 7};
  EXPECT_EQ(persistence(h, 3), (std::vector<double>{7, 7, 7}));
  EXPECT_TRUE(persistence(h, 0).empty());
  EXPECT_THROW(persistence(std::vector<double>{}, 1), ContractError);
}

Panel arx_panel(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto p = make_pickup_panel(TimeGrid::with_slots(parse_time("2014-04-01T00:00"), n, 15),
                             std::vector<double>(n));
  p.schema = FeatureSchema({{"g", FeatureSet::A, FeatureKind::Continuous, Spatial::Independent}});
  p.values.resize(n);
  p.missing.assign(n, 0);
  double prev = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    p.values[t] = g(rng);
    p.pickups[t] = t == 0 ? prev : 0.5 * prev + 2.0 * p.values[t];
    prev = p.pickups[t];
  }
  return p;
}

// Centered 2x2 normal equations solved by Cramer's rule.
std::pair<double, double> hand_ols(const Panel& p, std::size_t begin, std::size_t end) {
  double mx1 = 0, mx2 = 0, my = 0;
  const double n = static_cast<double>(end - begin - 1);
  for (std::size_t t = begin + 1; t < end; ++t) {
    mx1 += p.pickups[t - 1];
    mx2 += p.values[t];
    my += p.pickups[t];
  }
  mx1 /= n, mx2 /= n, my /= n;
  double s11 = 0, s12 = 0, s22 = 0, s1y = 0, s2y = 0;
  for (std::size_t t = begin + 1; t < end; ++t) {
    const double a = p.pickups[t - 1] - mx1, b = p.values[t] - mx2, y = p.pickups[t] - my;
    s11 += a * a, s12 += a * b, s22 += b * b, s1y += a * y, s2y += b * y;
  }
  const double det = s11 * s22 - s12 * s12;
  return {(s1y * s22 - s12 * s2y) / det, (s11 * s2y - s12 * s1y) / det};
}

TEST(RidgeArx, RecoversExactLinearSystem) {
  const auto p = arx_panel(300, 4);
  const auto params = fit_ridge_arx(p, 10, 250, 1, {"g"}, 0.0);
  const auto [b1, b2] = hand_ols(p, 10, 250);
  ASSERT_EQ(params.coefficients.size(), 2u);
  EXPECT_NEAR(params.coefficients[0], 0.5, 1e-8);
  EXPECT_NEAR(params.coefficients[1], 2.0, 1e-8);
  EXPECT_NEAR(params.coefficients[0], b1, 1e-8);
  EXPECT_NEAR(params.coefficients[1], b2, 1e-8);
  EXPECT_NEAR(params.intercept, 0.0, 1e-8);
  for (std::size_t t = 250; t < 300; ++t) {
    EXPECT_NEAR(predict_ridge_arx(params, p, t), p.pickups[t], 1e-7);
  }
}

TEST(RidgeArx, HeavyPenaltyShrinksToMean) {
  const auto p = arx_panel(200, 5);
  const auto params = fit_ridge_arx(p, 0, 150, 2, {"g"}, 1e15);
  double mean = 0.0;
  for (std::size_t t = 2; t < 150; ++t) mean += p.pickups[t];
  mean /= 148.0;
  for (double c : params.coefficients) EXPECT_LT(std::abs(c), 1e-9);
  EXPECT_NEAR(params.intercept, mean, 1e-9);
  EXPECT_NEAR(predict_ridge_arx(params, p, 170), mean, 1e-6);
}

TEST(RidgeArx, NoRegressorsPredictsMean) {
  const auto p = arx_panel(50, 6);
  const auto params = fit_ridge_arx(p, 0, 40, 0, {}, 0.0);
  double mean = 0.0;
  for (std::size_t t = 0; t < 40; ++t) mean += p.pickups[t];
  EXPECT_NEAR(predict_ridge_arx(params, p, 45), mean / 40.0, 1e-12);
}

TEST(RidgeArx, SingularSystemNeedsPenalty) {
  auto p = arx_panel(60, 7);
  std::fill(p.values.begin(), p.values.end(), 3.0);  // constant regressor
  try {
    fit_ridge_arx(p, 0, 60, 1, {"g"}, 0.0);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
  }
  EXPECT_NO_THROW(fit_ridge_arx(p, 0, 60, 1, {"g"}, 1e-3));
  EXPECT_THROW(fit_ridge_arx(p, 0, 60, 1, {"nope"}, 1.0), SchemaError);
}

TEST(Forecasters, OneStepBaselines) {
  const auto p = arx_panel(100, 8);
  SeasonalNaiveForecaster s(3);
  const auto sn = s.predict(p, 90, 100);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(sn[i], p.pickups[87 + i]);
  PersistenceForecaster last;
  EXPECT_EQ(last.predict(p, 50, 51)[0], p.pickups[49]);
  OracleForecaster o;
  EXPECT_EQ(o.predict(p, 10, 20), std::vector<double>(p.pickups.begin() + 10, p.pickups.begin() + 20));

  RidgeArxForecaster r(1, {}, 0.0);
  r.fit(p, 80);
  const auto rp = r.predict(p, 80, 100);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(rp[i], p.pickups[80 + i], 1e-7);
}

}  // namespace
}  // namespace ubernet
