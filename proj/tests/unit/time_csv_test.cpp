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

#include <random>
#include <sstream>

#include "ubernet/csv.hpp"
#include "ubernet/error.hpp"
#include "ubernet/time.hpp"

namespace ubernet {
namespace {

TEST(Time, ParsesAndFormats) {
  const auto t = parse_time("2014-04-13T08:15");
  EXPECT_EQ(format_time(t), "2014-04-13T08:15");
  EXPECT_EQ(parse_time("2014-04-13 08:15:00"), t);
  EXPECT_EQ(hour_of_day(t), 8);
  EXPECT_EQ(day_of_week(t), 0);  // a Sunday
  EXPECT_EQ(month_of_year(t), 4);
}

TEST(Time, RejectsOutOfRangeFields) {
  TimePoint t;
  EXPECT_FALSE(try_parse_time("2014-13-99T00:00", t));
  EXPECT_FALSE(try_parse_time("2014-02-30T00:00", t));
  EXPECT_FALSE(try_parse_time("2014-01-01T24:00", t));
  EXPECT_FALSE(try_parse_time("garbage", t));
  EXPECT_THROW(parse_time("2014-01-01"), ContractError);
}

TEST(TimeGrid, HalfOpenSlots) {
  const TimeGrid grid(parse_time("2014-04-01T08:00"), parse_time("2014-04-01T09:00"), 15);
  EXPECT_EQ(grid.slots(), 4u);
  EXPECT_EQ(grid.slot_of(parse_time("2014-04-01T08:14")), 0);
  EXPECT_EQ(grid.slot_of(parse_time("2014-04-01T08:15")), 1);
  EXPECT_EQ(grid.slot_of(parse_time("2014-04-01T09:00")), -1);
  EXPECT_EQ(grid.slot_of(parse_time("2014-04-01T07:59")), -1);
  EXPECT_EQ(grid.slot_start(3), parse_time("2014-04-01T08:45"));
  EXPECT_EQ(TimeGrid::with_slots(grid.start(), 4, 15), grid);
}

TEST(Csv, ReadsRowsWithLineNumbers) {
  std::istringstream in("a,b\r\n1,2\n\n3,4\n");
  const auto table = csv::read(in);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.lines[1], 4u);
  EXPECT_EQ(table.column("b"), 1);
  EXPECT_EQ(table.column("z"), -1);
  EXPECT_EQ(table.rows[1][1], "4");
}

TEST(Csv, RaggedRowIsParseError) {
  std::istringstream in("a,b\n1,2\n3\n");
  try {
    csv::read(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Csv, DoublesRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    double back = 0.0;
    ASSERT_TRUE(csv::parse_double(csv::format_double(v), back));
    EXPECT_EQ(back, v);
    ASSERT_TRUE(csv::parse_double(csv::format_double17(v), back));
    EXPECT_EQ(back, v);
  }
  double x;
  EXPECT_FALSE(csv::parse_double("", x));
  EXPECT_FALSE(csv::parse_double("1.5x", x));
  EXPECT_TRUE(csv::parse_double("+2", x));
  EXPECT_EQ(x, 2.0);
}

}  // namespace
}  // namespace ubernet
