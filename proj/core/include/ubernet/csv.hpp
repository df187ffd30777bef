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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ubernet::csv {

// Plain comma-separated text: no quoting, no embedded commas. Blank lines
// are skipped and a trailing '\r' is stripped from every line.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row (the header is line 1).
  std::vector<std::size_t> lines;

  // Column index for `name`, or -1.
  long column(std::string_view name) const;
};

std::vector<std::string> split_line(std::string_view line);

// Throws ParseError when a row's width differs from the header's.
Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

bool parse_double(std::string_view text, double& out);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);
// Fixed 17 significant digits; round-trips every finite double.
std::string format_double17(double v);

std::string trim(std::string_view s);

}  // namespace ubernet::csv
