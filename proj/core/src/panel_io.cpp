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
#include <fstream>
#include <istream>
#include <ostream>

#include "ubernet/csv.hpp"
#include "ubernet/error.hpp"
#include "ubernet/panel.hpp"

namespace ubernet {

namespace {

void write_header(std::ostream& out, const Panel& panel) {
  out << "datetime," << Normalizer::kPickups;
  for (const auto& f : panel.schema.features()) out << ',' << f.name;
  out << '\n';
}

std::string stem_with(const std::string& panel_path, const char* suffix) {
  std::string stem = panel_path;
  if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, ".csv") == 0) {
    stem.resize(stem.size() - 4);
  }
  return stem + suffix;
}

}  // namespace

std::string schema_path_for(const std::string& panel_path) {
  return stem_with(panel_path, "_schema.csv");
}

std::string mask_path_for(const std::string& panel_path) {
  return stem_with(panel_path, "_mask.csv");
}

void write_panel_csv(std::ostream& out, const Panel& panel) {
  write_header(out, panel);
  const auto nf = panel.schema.size();
  for (std::size_t t = 0; t < panel.size(); ++t) {
    out << format_time(panel.time(t)) << ',' << csv::format_double(panel.pickups[t]);
    for (std::size_t f = 0; f < nf; ++f) {
      out << ',';
      if (!panel.is_missing(t, f)) out << csv::format_double(panel.value(t, f));
    }
    out << '\n';
  }
}

void write_mask_csv(std::ostream& out, const Panel& panel,
                    const std::vector<std::uint8_t>& mask) {
  const auto nf = panel.schema.size();
  if (mask.size() != panel.size() * nf) throw ContractError("mask does not match panel");
  write_header(out, panel);
  for (std::size_t t = 0; t < panel.size(); ++t) {
    out << format_time(panel.time(t)) << ",0";
    for (std::size_t f = 0; f < nf; ++f) out << ',' << (mask[t * nf + f] ? 1 : 0);
    out << '\n';
  }
}

void write_panel_files(const std::string& path, const Panel& panel,
                       const std::vector<std::uint8_t>& mask) {
  const auto open = [](const std::string& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p);
    return out;
  };
  {
    auto out = open(path);
    write_panel_csv(out, panel);
  }
  {
    auto out = open(mask_path_for(path));
    write_mask_csv(out, panel, mask);
  }
  {
    auto out = open(schema_path_for(path));
    write_schema(out, panel.schema);
  }
}

Panel read_panel_csv(std::istream& in, const FeatureSchema& schema, int interval_minutes,
                     RegionScope scope) {
  const auto table = csv::read(in);
  if (table.header.size() < 2 || table.header[0] != "datetime" ||
      table.header[1] != Normalizer::kPickups) {
    throw SchemaError("panel header must start with 'datetime,p'");
  }
  if (table.header.size() != schema.size() + 2) {
    throw SchemaError("panel has " + std::to_string(table.header.size() - 2) +
                      " feature columns, schema names " + std::to_string(schema.size()));
  }
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (table.header[f + 2] != schema[f].name) {
      throw SchemaError("panel column '" + table.header[f + 2] + "' does not match schema feature '" +
                        schema[f].name + "'");
    }
  }
  if (table.rows.empty()) throw SchemaError("panel has no rows");

  std::vector<TimePoint> times;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    TimePoint t;
    if (!try_parse_time(table.rows[r][0], t)) {
      throw ParseError("malformed datetime '" + table.rows[r][0] + "'", table.lines[r]);
    }
    times.push_back(t);
  }
  int interval = interval_minutes;
  if (times.size() >= 2) interval = static_cast<int>((times[1] - times[0]).count());
  for (std::size_t r = 1; r < times.size(); ++r) {
    if ((times[r] - times[r - 1]).count() != interval) {
      throw ParseError("rows are not consecutive slots of " + std::to_string(interval) + " minutes",
                       table.lines[r]);
    }
  }
  Panel panel;
  panel.grid = TimeGrid::with_slots(times.front(), times.size(), interval);
  panel.scope = std::move(scope);
  panel.schema = schema;
  const auto nf = schema.size();
  panel.pickups.resize(times.size());
  panel.values.assign(times.size() * nf, std::nan(""));
  panel.missing.assign(times.size() * nf, 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    double p = 0.0;
    if (!csv::parse_double(row[1], p) || !(p >= 0.0)) {
      throw ParseError("pickups must be a non-negative number, got '" + row[1] + "'", table.lines[r]);
    }
    panel.pickups[r] = p;
    for (std::size_t f = 0; f < nf; ++f) {
      const auto& cell = row[f + 2];
      if (cell.empty() || cell == "NA") {
        panel.missing[r * nf + f] = 1;
        continue;
      }
      double v = 0.0;
      if (!csv::parse_double(cell, v)) {
        throw ParseError("malformed value '" + cell + "' for " + schema[f].name, table.lines[r]);
      }
      panel.values[r * nf + f] = v;
    }
  }
  panel.validate();
  return panel;
}

Panel read_panel_files(const std::string& path, int interval_minutes) {
  const auto schema = read_schema_file(schema_path_for(path));
  std::ifstream in(path);
  if (!in) throw InputError("cannot open panel " + path);
  try {
    return read_panel_csv(in, schema, interval_minutes);
  } catch (const ParseError& e) {
    throw e.with_file(path);
  }
}

}  // namespace ubernet
