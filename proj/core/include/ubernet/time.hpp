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

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace ubernet {

// Wall-clock instant at minute resolution. Timestamps carry no zone; the
// panel treats them as local civil time.
using TimePoint = std::chrono::sys_time<std::chrono::minutes>;

// Parses `YYYY-MM-DDTHH:MM` (a space may replace the `T`, and a trailing
// `:00` seconds field is accepted). Returns false on any malformed or
// out-of-range field.
bool try_parse_time(std::string_view text, TimePoint& out);

// Throws ContractError when the text does not parse.
TimePoint parse_time(std::string_view text);

std::string format_time(TimePoint t);

int hour_of_day(TimePoint t);
// 0 = Sunday ... 6 = Saturday.
int day_of_week(TimePoint t);
// 1 ... 12.
int month_of_year(TimePoint t);

// Half-open calendar grid [start, end) cut into `interval_minutes` slots.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(TimePoint start, TimePoint end, int interval_minutes);
  // Grid of `slots` consecutive slots starting at `start`.
  static TimeGrid with_slots(TimePoint start, std::size_t slots,
                             int interval_minutes);

  TimePoint start() const { return start_; }
  TimePoint end() const { return end_; }
  int interval_minutes() const { return interval_; }
  std::size_t slots() const { return slots_; }

  TimePoint slot_start(std::size_t i) const;
  // Index of the slot containing t, or -1 when t lies outside [start, end).
  std::int64_t slot_of(TimePoint t) const;
  bool contains(TimePoint t) const { return t >= start_ && t < end_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  TimePoint start_{};
  TimePoint end_{};
  int interval_ = 15;
  std::size_t slots_ = 0;
};

}  // namespace ubernet
