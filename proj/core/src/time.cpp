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

#include "ubernet/time.hpp"

#include <charconv>
#include <cstdio>

#include "ubernet/error.hpp"

namespace ubernet {
namespace {

bool parse_field(std::string_view text, std::size_t pos, std::size_t len,
                 int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  for (const char* p = first; p != last; ++p) {
    if (*p < '0' || *p > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

bool try_parse_time(std::string_view text, TimePoint& out) {
  // YYYY-MM-DDTHH:MM[:SS]
  if (text.size() != 16 && text.size() != 19) return false;
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':') {
    return false;
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!parse_field(text, 0, 4, y) || !parse_field(text, 5, 2, mo) ||
      !parse_field(text, 8, 2, d) || !parse_field(text, 11, 2, h) ||
      !parse_field(text, 14, 2, mi)) {
    return false;
  }
  if (text.size() == 19) {
    if (text[16] != ':' || !parse_field(text, 17, 2, sec) || sec != 0) {
      return false;
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59) return false;
  out = sys_days{ymd} + hours{h} + minutes{mi};
  return true;
}

TimePoint parse_time(std::string_view text) {
  TimePoint t;
  if (!try_parse_time(text, t)) {
    throw ContractError("malformed datetime '" + std::string(text) + "'");
  }
  return t;
}

std::string format_time(TimePoint t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const auto minutes_of_day = (t - day_point).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(minutes_of_day / 60),
                static_cast<int>(minutes_of_day % 60));
  return buf;
}

int hour_of_day(TimePoint t) {
  using namespace std::chrono;
  return static_cast<int>((t - floor<days>(t)).count() / 60);
}

int day_of_week(TimePoint t) {
  using namespace std::chrono;
  return static_cast<int>(weekday{floor<days>(t)}.c_encoding());
}

int month_of_year(TimePoint t) {
  using namespace std::chrono;
  return static_cast<int>(
      static_cast<unsigned>(year_month_day{floor<days>(t)}.month()));
}

TimeGrid::TimeGrid(TimePoint start, TimePoint end, int interval_minutes)
    : start_(start), end_(end), interval_(interval_minutes) {
  if (interval_minutes != 15 && interval_minutes != 30) {
    throw ContractError("interval must be 15 or 30 minutes, got " +
                        std::to_string(interval_minutes));
  }
  if (!(start < end)) throw ContractError("time grid start must precede end");
  const auto span = (end - start).count();
  if (span % interval_minutes != 0) {
    throw ContractError("time grid span is not a multiple of the interval");
  }
  slots_ = static_cast<std::size_t>(span / interval_minutes);
}

TimeGrid TimeGrid::with_slots(TimePoint start, std::size_t slots,
                              int interval_minutes) {
  if (slots == 0) {
    // Only splits and slices produce empty grids.
    if (interval_minutes != 15 && interval_minutes != 30) {
      throw ContractError("interval must be 15 or 30 minutes");
    }
    TimeGrid g;
    g.start_ = start;
    g.end_ = start;
    g.interval_ = interval_minutes;
    return g;
  }
  return TimeGrid(start,
                  start + std::chrono::minutes{static_cast<std::int64_t>(slots) *
                                               interval_minutes},
                  interval_minutes);
}

TimePoint TimeGrid::slot_start(std::size_t i) const {
  return start_ +
         std::chrono::minutes{static_cast<std::int64_t>(i) * interval_};
}

std::int64_t TimeGrid::slot_of(TimePoint t) const {
  if (!contains(t)) return -1;
  return (t - start_).count() / interval_;
}

}  // namespace ubernet
