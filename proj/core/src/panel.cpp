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

#include "ubernet/panel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "ubernet/csv.hpp"
#include "ubernet/error.hpp"

namespace ubernet {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Most frequent level; ties go to the smallest level.
double weighted_mode(const std::map<long long, double>& weights) {
  long long best = 0;
  double best_weight = -1.0;
  for (const auto& [level, w] : weights) {
    if (w > best_weight) {
      best = level;
      best_weight = w;
    }
  }
  return static_cast<double>(best);
}

std::optional<double> parse_cell(std::string_view text, std::size_t line) {
  if (text.empty() || text == "NA" || text == "na" || text == "NaN") return std::nullopt;
  double v = 0.0;
  if (!csv::parse_double(text, v)) {
    throw ParseError("malformed number '" + std::string(text) + "'", line);
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema

char to_char(FeatureSet set) {
  switch (set) {
    case FeatureSet::A: return 'A';
    case FeatureSet::B: return 'B';
    case FeatureSet::C: return 'C';
    case FeatureSet::D: return 'D';
  }
  return '?';
}

FeatureSet feature_set_from(std::string_view text) {
  if (text == "A" || text == "a") return FeatureSet::A;
  if (text == "B" || text == "b") return FeatureSet::B;
  if (text == "C" || text == "c") return FeatureSet::C;
  if (text == "D" || text == "d") return FeatureSet::D;
  throw SchemaError("unknown feature set '" + std::string(text) + "'");
}

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::Continuous ? "continuous" : "categorical";
}

std::string_view to_string(Spatial spatial) {
  return spatial == Spatial::Independent ? "space-independent" : "space-dependent";
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features)
    : features_(std::move(features)) {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) throw SchemaError("feature with empty name");
    if (f.name == Normalizer::kPickups) {
      throw SchemaError("feature name 'p' is reserved for pickups");
    }
    if (!seen.insert(f.name).second) {
      throw SchemaError("duplicate feature '" + f.name + "'");
    }
    const bool independent = f.spatial == Spatial::Independent;
    if ((f.set == FeatureSet::A) != independent) {
      throw SchemaError("feature '" + f.name + "' in set " + to_char(f.set) +
                        " must be " +
                        (f.set == FeatureSet::A ? "space-independent"
                                                : "space-dependent"));
    }
    if (f.cardinality < 0) {
      throw SchemaError("feature '" + f.name + "' has negative cardinality");
    }
  }
}

FeatureSchema FeatureSchema::canonical() {
  using K = FeatureKind;
  const auto a = [](std::string n, K k, int card = 0) {
    return FeatureSpec{std::move(n), FeatureSet::A, k, Spatial::Independent, card};
  };
  const auto dep = [](std::string n, FeatureSet s, K k, int card = 0) {
    return FeatureSpec{std::move(n), s, k, Spatial::Dependent, card};
  };
  return FeatureSchema({
      a("hour", K::Categorical, 24),
      a("wed", K::Categorical, 2),
      a("day", K::Categorical, 7),
      a("month", K::Categorical, 13),
      a("vsb", K::Continuous),
      a("temp", K::Continuous),
      a("dewp", K::Continuous),
      a("hd", K::Continuous),
      a("spd", K::Continuous),
      a("slp", K::Continuous),
      a("pcp01", K::Continuous),
      a("pcp06", K::Continuous),
      a("pcp24", K::Continuous),
      a("sd", K::Continuous),
      dep("Unemployment", FeatureSet::B, K::Continuous),
      dep("Income", FeatureSet::B, K::Continuous),
      dep("Poverty", FeatureSet::B, K::Continuous),
      dep("Self-employed", FeatureSet::B, K::Continuous),
      dep("TotalPop", FeatureSet::B, K::Continuous),
      dep("Walk", FeatureSet::C, K::Continuous),
      dep("Transit", FeatureSet::C, K::Continuous),
      dep("Carpool", FeatureSet::C, K::Continuous),
      dep("WorkAtHome", FeatureSet::C, K::Continuous),
      dep("MeanCommute", FeatureSet::C, K::Continuous),
      dep("streetcrime", FeatureSet::D, K::Continuous),
      dep("borough", FeatureSet::D, K::Categorical, 5),
      dep("PUMA", FeatureSet::D, K::Categorical),
      dep("transp", FeatureSet::D, K::Continuous),
  });
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

FeatureSchema FeatureSchema::select(const std::vector<std::string>& names) const {
  for (const auto& n : names) {
    if (!index_of(n)) throw SchemaError("unknown feature '" + n + "'");
  }
  std::vector<FeatureSpec> kept;
  for (const auto& f : features_) {
    if (std::find(names.begin(), names.end(), f.name) != names.end()) kept.push_back(f);
  }
  return FeatureSchema(std::move(kept));
}

FeatureSchema FeatureSchema::without(std::string_view name) const {
  if (!index_of(name)) throw SchemaError("unknown feature '" + std::string(name) + "'");
  std::vector<FeatureSpec> kept;
  for (const auto& f : features_) {
    if (f.name != name) kept.push_back(f);
  }
  return FeatureSchema(std::move(kept));
}

FeatureSchema read_schema(std::istream& in) {
  const auto table = csv::read(in);
  const auto col = [&](const char* name) {
    const long c = table.column(name);
    if (c < 0) throw SchemaError(std::string("schema file lacks column '") + name + "'");
    return static_cast<std::size_t>(c);
  };
  const auto name_c = col("name");
  const auto set_c = col("set");
  const auto kind_c = col("kind");
  const auto spatial_c = col("spatial");
  const long card_c = table.column("cardinality");
  std::vector<FeatureSpec> specs;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    FeatureSpec spec;
    spec.name = row[name_c];
    spec.set = feature_set_from(row[set_c]);
    const auto kind = lower(row[kind_c]);
    if (kind == "continuous") {
      spec.kind = FeatureKind::Continuous;
    } else if (kind == "categorical") {
      spec.kind = FeatureKind::Categorical;
    } else {
      throw ParseError("unknown feature kind '" + row[kind_c] + "'", table.lines[r]);
    }
    const auto spatial = lower(row[spatial_c]);
    if (spatial == "space-independent" || spatial == "independent") {
      spec.spatial = Spatial::Independent;
    } else if (spatial == "space-dependent" || spatial == "dependent") {
      spec.spatial = Spatial::Dependent;
    } else {
      throw ParseError("unknown spatial tag '" + row[spatial_c] + "'", table.lines[r]);
    }
    if (card_c >= 0 && !row[card_c].empty()) {
      double c = 0;
      if (!csv::parse_double(row[card_c], c) || c < 0 || c != std::floor(c)) {
        throw ParseError("bad cardinality '" + row[card_c] + "'", table.lines[r]);
      }
      spec.cardinality = static_cast<int>(c);
    }
    specs.push_back(std::move(spec));
  }
  return FeatureSchema(std::move(specs));
}

FeatureSchema read_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open schema " + path);
  return read_schema(in);
}

void write_schema(std::ostream& out, const FeatureSchema& schema) {
  out << "name,set,kind,spatial,cardinality\n";
  for (const auto& f : schema.features()) {
    out << f.name << ',' << to_char(f.set) << ',' << to_string(f.kind) << ','
        << to_string(f.spatial) << ',' << f.cardinality << '\n';
  }
}

// ---------------------------------------------------------------------------
// Raw inputs

std::vector<RawPickupEvent> parse_pickups(std::istream& in) {
  const auto table = csv::read(in);
  const long dt = table.column("datetime");
  const long region = table.column("region");
  if (dt < 0 || region < 0) {
    throw SchemaError("pickups header must name 'datetime' and 'region' columns");
  }
  std::vector<RawPickupEvent> events;
  events.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    RawPickupEvent e;
    if (!try_parse_time(row[dt], e.timestamp)) {
      throw ParseError("malformed datetime '" + row[dt] + "'", table.lines[r]);
    }
    e.region = row[region];
    if (e.region.empty()) throw ParseError("empty region", table.lines[r]);
    events.push_back(std::move(e));
  }
  return events;
}

TimeTable read_time_table(std::istream& in) {
  const auto table = csv::read(in);
  if (table.header.empty() || table.header[0] != "datetime") {
    throw SchemaError("time-keyed table must start with a 'datetime' column");
  }
  TimeTable out;
  out.columns.assign(table.header.begin() + 1, table.header.end());
  out.values.resize(out.columns.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    TimePoint t;
    if (!try_parse_time(row[0], t)) {
      throw ParseError("malformed datetime '" + row[0] + "'", table.lines[r]);
    }
    out.times.push_back(t);
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
      out.values[c].push_back(parse_cell(row[c + 1], table.lines[r]));
    }
  }
  return out;
}

RegionTable read_region_table(std::istream& in) {
  const auto table = csv::read(in);
  if (table.header.empty() || table.header[0] != "region") {
    throw SchemaError("region-keyed table must start with a 'region' column");
  }
  RegionTable out;
  out.columns.assign(table.header.begin() + 1, table.header.end());
  out.values.resize(out.columns.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row[0].empty()) throw ParseError("empty region", table.lines[r]);
    out.regions.push_back(row[0]);
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
      out.values[c].push_back(parse_cell(row[c + 1], table.lines[r]));
    }
  }
  return out;
}

FeatureTables read_feature_tables(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InputError("feature directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  FeatureTables tables;
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    in.clear();
    in.seekg(0);
    const auto header = csv::split_line(first);
    try {
      if (!header.empty() && header[0] == "datetime") {
        tables.time_tables.push_back(read_time_table(in));
      } else if (!header.empty() && header[0] == "region") {
        tables.region_tables.push_back(read_region_table(in));
      } else {
        throw SchemaError("first column must be 'datetime' or 'region'");
      }
    } catch (const ParseError& e) {
      throw e.with_file(path.string());
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
  }
  return tables;
}

void add_edge(Adjacency& adjacency, const std::string& a, const std::string& b) {
  if (a == b) {
    adjacency[a];
    return;
  }
  adjacency[a].insert(b);
  adjacency[b].insert(a);
}

Adjacency read_adjacency(std::istream& in) {
  const auto table = csv::read(in);
  const long region = table.column("region");
  const long neighbor = table.column("neighbor");
  if (region < 0 || neighbor < 0) {
    throw SchemaError("adjacency header must name 'region' and 'neighbor'");
  }
  Adjacency adjacency;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& a = table.rows[r][region];
    const auto& b = table.rows[r][neighbor];
    if (a.empty() || b.empty()) throw ParseError("empty region id", table.lines[r]);
    add_edge(adjacency, a, b);
  }
  return adjacency;
}

// ---------------------------------------------------------------------------
// Panel

std::size_t Panel::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), 1));
}

Panel Panel::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw ContractError("panel slice out of range");
  Panel out;
  out.grid = TimeGrid::with_slots(grid.slot_start(begin), end - begin,
                                  grid.interval_minutes());
  out.scope = scope;
  out.schema = schema;
  out.pickups_input = pickups_input;
  out.pickups.assign(pickups.begin() + static_cast<long>(begin),
                     pickups.begin() + static_cast<long>(end));
  const auto f = schema.size();
  out.values.assign(values.begin() + static_cast<long>(begin * f),
                    values.begin() + static_cast<long>(end * f));
  out.missing.assign(missing.begin() + static_cast<long>(begin * f),
                     missing.begin() + static_cast<long>(end * f));
  if (regional) {
    RegionalDetail detail = *regional;
    detail.slot_counts.assign(regional->slot_counts.begin() + static_cast<long>(begin),
                              regional->slot_counts.begin() + static_cast<long>(end));
    out.regional = std::move(detail);
  }
  return out;
}

Panel Panel::select_features(const std::vector<std::string>& names) const {
  Panel out;
  out.grid = grid;
  out.scope = scope;
  out.schema = schema.select(names);
  out.pickups_input = pickups_input;
  out.pickups = pickups;
  std::vector<std::size_t> src;
  for (const auto& f : out.schema.features()) src.push_back(*schema.index_of(f.name));
  const auto nf = out.schema.size();
  out.values.resize(size() * nf);
  out.missing.resize(size() * nf);
  for (std::size_t t = 0; t < size(); ++t) {
    for (std::size_t j = 0; j < nf; ++j) {
      out.values[t * nf + j] = value(t, src[j]);
      out.missing[t * nf + j] = missing[t * schema.size() + src[j]];
    }
  }
  if (regional) {
    RegionalDetail detail;
    detail.regions = regional->regions;
    detail.slot_counts = regional->slot_counts;
    for (const auto& [name, vals] : regional->values) {
      if (out.schema.index_of(name)) detail.values[name] = vals;
    }
    out.regional = std::move(detail);
  }
  return out;
}

Panel Panel::without_feature(std::string_view name) const {
  const auto kept = schema.without(name);
  std::vector<std::string> names;
  for (const auto& f : kept.features()) names.push_back(f.name);
  return select_features(names);
}

void Panel::validate() const {
  if (pickups.size() != grid.slots()) {
    throw ContractError("panel has " + std::to_string(pickups.size()) +
                        " rows for a grid of " + std::to_string(grid.slots()) + " slots");
  }
  if (values.size() != size() * schema.size() || missing.size() != values.size()) {
    throw ContractError("panel feature block has the wrong size");
  }
  for (std::size_t t = 0; t < size(); ++t) {
    if (!(pickups[t] >= 0.0) || !std::isfinite(pickups[t])) {
      throw ContractError("negative or non-finite pickups at " + format_time(time(t)));
    }
  }
  if (regional && regional->slot_counts.size() != size()) {
    throw ContractError("regional detail does not cover the grid");
  }
}

Panel make_pickup_panel(const TimeGrid& grid, std::vector<double> pickups,
                        RegionScope scope) {
  if (pickups.size() != grid.slots()) throw ContractError("pickups do not match grid");
  Panel p;
  p.grid = grid;
  p.scope = std::move(scope);
  p.pickups = std::move(pickups);
  p.validate();
  return p;
}

AggregateResult aggregate_counts(const std::vector<RawPickupEvent>& events,
                                 const TimeGrid& grid, const RegionScope& scope) {
  AggregateResult result;
  result.total_events = events.size();

  std::set<std::string> region_set;
  if (!scope.is_global()) region_set.insert(scope.region);
  for (const auto& e : events) {
    if (scope.matches(e.region) && grid.contains(e.timestamp)) region_set.insert(e.region);
  }
  RegionalDetail detail;
  detail.regions.assign(region_set.begin(), region_set.end());
  std::map<std::string, std::uint32_t> region_index;
  for (std::uint32_t i = 0; i < detail.regions.size(); ++i) {
    region_index[detail.regions[i]] = i;
  }

  std::vector<std::map<std::uint32_t, std::uint32_t>> counts(grid.slots());
  std::vector<double> pickups(grid.slots(), 0.0);
  for (const auto& e : events) {
    if (!scope.matches(e.region)) {
      ++result.out_of_scope;
      continue;
    }
    const auto slot = grid.slot_of(e.timestamp);
    if (slot < 0) {
      ++result.dropped_outside_grid;
      continue;
    }
    pickups[static_cast<std::size_t>(slot)] += 1.0;
    ++counts[static_cast<std::size_t>(slot)][region_index.at(e.region)];
    ++result.counted;
  }
  detail.slot_counts.resize(grid.slots());
  for (std::size_t t = 0; t < grid.slots(); ++t) {
    detail.slot_counts[t].assign(counts[t].begin(), counts[t].end());
  }
  result.panel = make_pickup_panel(grid, std::move(pickups), scope);
  result.panel.regional = std::move(detail);
  return result;
}

namespace {

struct ColumnRef {
  const TimeTable* time_table = nullptr;
  const RegionTable* region_table = nullptr;
  std::size_t column = 0;
};

ColumnRef find_source(const FeatureTables& tables, const FeatureSpec& spec) {
  ColumnRef ref;
  if (spec.spatial == Spatial::Independent) {
    for (const auto& t : tables.time_tables) {
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (t.columns[c] == spec.name) return {&t, nullptr, c};
      }
    }
  } else {
    for (const auto& t : tables.region_tables) {
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (t.columns[c] == spec.name) return {nullptr, &t, c};
      }
    }
  }
  throw SchemaError("feature '" + spec.name + "' is absent from all " +
                    (spec.spatial == Spatial::Independent ? "time-keyed" : "region-keyed") +
                    " feature tables");
}

// Recomputes the space-dependent cell of `slot` from per-region values.
// Returns nullopt when a contributing region lacks a value.
std::optional<double> regional_cell(const RegionalDetail& detail,
                                    const std::vector<std::optional<double>>& values,
                                    std::size_t slot, FeatureKind kind) {
  std::vector<std::pair<std::uint32_t, double>> weights;
  for (const auto& [region, count] : detail.slot_counts[slot]) {
    weights.emplace_back(region, static_cast<double>(count));
  }
  if (weights.empty()) {
    // No pickups in scope: every known region counts equally.
    for (std::uint32_t r = 0; r < detail.regions.size(); ++r) weights.emplace_back(r, 1.0);
  }
  if (weights.empty()) return std::nullopt;
  if (kind == FeatureKind::Categorical) {
    std::map<long long, double> levels;
    for (const auto& [r, w] : weights) {
      if (!values[r]) return std::nullopt;
      levels[std::llround(*values[r])] += w;
    }
    return weighted_mode(levels);
  }
  double sum = 0.0;
  double total = 0.0;
  for (const auto& [r, w] : weights) {
    if (!values[r]) return std::nullopt;
    sum += w * *values[r];
    total += w;
  }
  return sum / total;
}

bool has_source(const FeatureTables& tables, const FeatureSpec& spec) {
  try {
    find_source(tables, spec);
    return true;
  } catch (const SchemaError&) {
    return false;
  }
}

// Calendar features may be derived from the slot start instead of a table.
std::optional<double> calendar_value(const std::string& name, TimePoint t) {
  if (name == "hour") return hour_of_day(t);
  if (name == "day") return day_of_week(t);
  if (name == "month") return month_of_year(t);
  if (name == "wed") {
    const int d = day_of_week(t);
    return d == 0 || d == 6 ? 1.0 : 0.0;
  }
  return std::nullopt;
}

}  // namespace

Panel join_features(const Panel& panel, const FeatureTables& tables,
                    const FeatureSchema& schema) {
  Panel out = panel;
  out.schema = schema;
  const auto n = panel.size();
  const auto nf = schema.size();
  out.values.assign(n * nf, kNaN);
  out.missing.assign(n * nf, 1);
  if (out.regional) out.regional->values.clear();

  for (std::size_t f = 0; f < nf; ++f) {
    const auto& spec = schema[f];
    if (spec.spatial == Spatial::Independent && !has_source(tables, spec) &&
        calendar_value(spec.name, panel.grid.start())) {
      for (std::size_t t = 0; t < n; ++t) {
        out.values[t * nf + f] = *calendar_value(spec.name, panel.time(t));
        out.missing[t * nf + f] = 0;
      }
      continue;
    }
    const auto src = find_source(tables, spec);
    if (src.time_table) {
      const auto& table = *src.time_table;
      const auto& column = table.values[src.column];
      std::vector<double> sums(n, 0.0);
      std::vector<double> counts(n, 0.0);
      std::vector<std::map<long long, double>> levels(
          spec.kind == FeatureKind::Categorical ? n : 0);
      for (std::size_t r = 0; r < table.times.size(); ++r) {
        if (!column[r]) continue;
        const auto slot = panel.grid.slot_of(table.times[r]);
        if (slot < 0) continue;
        const auto s = static_cast<std::size_t>(slot);
        sums[s] += *column[r];
        counts[s] += 1.0;
        if (spec.kind == FeatureKind::Categorical) levels[s][std::llround(*column[r])] += 1.0;
      }
      for (std::size_t t = 0; t < n; ++t) {
        if (counts[t] == 0.0) continue;
        out.values[t * nf + f] = spec.kind == FeatureKind::Categorical
                                     ? weighted_mode(levels[t])
                                     : sums[t] / counts[t];
        out.missing[t * nf + f] = 0;
      }
    } else {
      if (!out.regional) {
        throw ContractError("space-dependent feature '" + spec.name +
                            "' needs a panel aggregated from raw events");
      }
      const auto& table = *src.region_table;
      std::map<std::string, std::optional<double>> by_region;
      for (std::size_t r = 0; r < table.regions.size(); ++r) {
        by_region[table.regions[r]] = table.values[src.column][r];
      }
      auto& detail = *out.regional;
      std::vector<std::optional<double>> region_values(detail.regions.size());
      for (std::size_t r = 0; r < detail.regions.size(); ++r) {
        auto it = by_region.find(detail.regions[r]);
        if (it != by_region.end()) region_values[r] = it->second;
      }
      for (std::size_t t = 0; t < n; ++t) {
        if (auto v = regional_cell(detail, region_values, t, spec.kind)) {
          out.values[t * nf + f] = *v;
          out.missing[t * nf + f] = 0;
        }
      }
      detail.values[spec.name] = std::move(region_values);
    }
  }
  return out;
}

std::optional<std::string> nearest_region_with_value(
    const std::string& origin, const Adjacency& adjacency,
    const std::set<std::string>& has_value) {
  if (has_value.count(origin)) return origin;
  std::set<std::string> visited{origin};
  std::vector<std::string> frontier{origin};
  while (!frontier.empty()) {
    std::set<std::string> next;
    for (const auto& r : frontier) {
      auto it = adjacency.find(r);
      if (it == adjacency.end()) continue;
      for (const auto& nb : it->second) {
        if (!visited.count(nb)) next.insert(nb);
      }
    }
    // `next` is ordered, so the first hit is the lexicographic tie-break.
    for (const auto& r : next) {
      if (has_value.count(r)) return r;
    }
    visited.insert(next.begin(), next.end());
    frontier.assign(next.begin(), next.end());
  }
  return std::nullopt;
}

Panel impute_missing(const Panel& panel, const Adjacency& adjacency,
                     const ImputeOptions& options) {
  Panel out = panel;
  const auto n = panel.size();
  const auto nf = panel.schema.size();
  if (out.missing_count() == 0) return out;

  for (std::size_t f = 0; f < nf; ++f) {
    const auto& spec = panel.schema[f];
    bool any_missing = false;
    bool any_present = false;
    for (std::size_t t = 0; t < n; ++t) {
      (panel.is_missing(t, f) ? any_missing : any_present) = true;
    }
    if (!any_missing) continue;

    const bool regional = spec.spatial == Spatial::Dependent && out.regional &&
                          out.regional->values.count(spec.name);
    if (regional) {
      auto& detail = *out.regional;
      auto& region_values = detail.values[spec.name];
      std::set<std::string> observed;
      double observed_sum = 0.0;
      for (std::size_t r = 0; r < detail.regions.size(); ++r) {
        if (region_values[r]) {
          observed.insert(detail.regions[r]);
          observed_sum += *region_values[r];
        }
      }
      if (observed.empty()) {
        throw ImputationError("feature '" + spec.name + "' has no observed value in any region");
      }
      std::map<std::string, double> by_region;
      for (std::size_t r = 0; r < detail.regions.size(); ++r) {
        if (region_values[r]) by_region[detail.regions[r]] = *region_values[r];
      }
      auto filled = region_values;
      for (std::size_t r = 0; r < detail.regions.size(); ++r) {
        if (filled[r]) continue;
        if (auto nb = nearest_region_with_value(detail.regions[r], adjacency, observed)) {
          filled[r] = by_region.at(*nb);
        } else {
          // Unreachable from every observed region.
          filled[r] = observed_sum / static_cast<double>(observed.size());
        }
      }
      region_values = filled;
      for (std::size_t t = 0; t < n; ++t) {
        if (!panel.is_missing(t, f)) continue;
        const auto v = regional_cell(detail, region_values, t, spec.kind);
        out.value(t, f) = v.value_or(observed_sum / static_cast<double>(observed.size()));
        out.missing[t * nf + f] = 0;
      }
      continue;
    }

    if (!any_present) {
      throw ImputationError("feature '" + spec.name + "' is missing in every slot");
    }
    const std::size_t fallback_end =
        options.fallback_end == 0 ? n : std::min(options.fallback_end, n);
    double fallback = 0.0;
    {
      double sum = 0.0;
      double count = 0.0;
      std::map<long long, double> levels;
      for (int pass = 0; pass < 2 && count == 0.0; ++pass) {
        const std::size_t end = pass == 0 ? fallback_end : n;
        for (std::size_t t = 0; t < end; ++t) {
          if (panel.is_missing(t, f)) continue;
          sum += panel.value(t, f);
          count += 1.0;
          levels[std::llround(panel.value(t, f))] += 1.0;
        }
      }
      fallback = spec.kind == FeatureKind::Categorical ? weighted_mode(levels) : sum / count;
    }
    double last = fallback;
    for (std::size_t t = 0; t < n; ++t) {
      if (panel.is_missing(t, f)) {
        out.value(t, f) = last;
        out.missing[t * nf + f] = 0;
      } else {
        last = panel.value(t, f);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

Normalizer::Normalizer(std::vector<ColumnStats> columns) : columns_(std::move(columns)) {}

Normalizer Normalizer::fit(const Panel& panel, std::size_t begin, std::size_t end) {
  if (begin >= end || end > panel.size()) {
    throw ContractError("normalizer fit range is empty or outside the panel");
  }
  const auto stats = [&](std::string name, auto&& get) {
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
      if (auto v = get(t)) {
        sum += *v;
        count += 1.0;
      }
    }
    ColumnStats s;
    s.name = std::move(name);
    if (count == 0.0) {
      s.constant = true;
      return s;
    }
    s.mean = sum / count;
    double ss = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
      if (auto v = get(t)) ss += (*v - s.mean) * (*v - s.mean);
    }
    s.stddev = std::sqrt(ss / count);
    if (!(s.stddev > 1e-12 * std::max(1.0, std::abs(s.mean)))) {
      s.constant = true;
      s.mean = 0.0;
      s.stddev = 1.0;
    }
    return s;
  };
  std::vector<ColumnStats> columns;
  columns.push_back(stats(std::string(kPickups),
                          [&](std::size_t t) -> std::optional<double> { return panel.pickups[t]; }));
  for (std::size_t f = 0; f < panel.schema.size(); ++f) {
    if (panel.schema[f].kind != FeatureKind::Continuous) continue;
    columns.push_back(stats(panel.schema[f].name, [&](std::size_t t) -> std::optional<double> {
      if (panel.is_missing(t, f)) return std::nullopt;
      return panel.value(t, f);
    }));
  }
  return Normalizer(std::move(columns));
}

const ColumnStats* Normalizer::find(std::string_view column) const {
  for (const auto& c : columns_) {
    if (c.name == column) return &c;
  }
  return nullptr;
}

std::vector<std::string> Normalizer::constant_columns() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.constant) out.push_back(c.name);
  }
  return out;
}

double Normalizer::apply_value(std::string_view column, double v) const {
  const auto* s = find(column);
  if (!s) throw ContractError("normalizer has no column '" + std::string(column) + "'");
  if (s->constant) return v;
  return (v - s->mean) / s->stddev;
}

double Normalizer::invert_value(std::string_view column, double v) const {
  const auto* s = find(column);
  if (!s) throw ContractError("normalizer has no column '" + std::string(column) + "'");
  if (s->constant) return v;
  return v * s->stddev + s->mean;
}

namespace {

Panel transform_panel(const Normalizer& norm, const Panel& panel, bool forward) {
  Panel out = panel;
  const auto map = [&](std::string_view col, double v) {
    return forward ? norm.apply_value(col, v) : norm.invert_value(col, v);
  };
  for (auto& p : out.pickups) p = map(Normalizer::kPickups, p);
  for (std::size_t f = 0; f < panel.schema.size(); ++f) {
    if (panel.schema[f].kind != FeatureKind::Continuous) continue;
    const auto& name = panel.schema[f].name;
    for (std::size_t t = 0; t < panel.size(); ++t) {
      if (!panel.is_missing(t, f)) out.value(t, f) = map(name, panel.value(t, f));
    }
  }
  // Region values stay raw; they only feed imputation.
  return out;
}

}  // namespace

Panel Normalizer::apply(const Panel& panel) const { return transform_panel(*this, panel, true); }
Panel Normalizer::invert(const Panel& panel) const { return transform_panel(*this, panel, false); }

std::pair<std::size_t, std::size_t> slot_range(const TimeGrid& grid, TimePoint from,
                                               TimePoint to) {
  const auto clamp = [&](TimePoint t) -> std::size_t {
    if (t <= grid.start()) return 0;
    if (t >= grid.end()) return grid.slots();
    const auto minutes = (t - grid.start()).count();
    const auto iv = grid.interval_minutes();
    return static_cast<std::size_t>((minutes + iv - 1) / iv);
  };
  return {clamp(from), clamp(to)};
}

Normalizer fit_normalizer(const Panel& panel, TimePoint from, TimePoint to) {
  if (!(from < to) || from < panel.grid.start() || to > panel.grid.end()) {
    throw ContractError("training range must be non-empty and inside the grid");
  }
  const auto [b, e] = slot_range(panel.grid, from, to);
  return Normalizer::fit(panel, b, e);
}

// ---------------------------------------------------------------------------
// Windows

FeatureSchema resolve_cardinalities(const Panel& panel) {
  auto specs = panel.schema.features();
  for (std::size_t f = 0; f < specs.size(); ++f) {
    auto& spec = specs[f];
    if (spec.kind != FeatureKind::Categorical) continue;
    long long max_level = -1;
    for (std::size_t t = 0; t < panel.size(); ++t) {
      if (panel.is_missing(t, f)) continue;
      max_level = std::max(max_level, std::llround(panel.value(t, f)));
    }
    if (spec.cardinality == 0) spec.cardinality = static_cast<int>(std::max(1LL, max_level + 1));
  }
  return FeatureSchema(std::move(specs));
}

std::vector<InputColumn> input_columns(const Panel& panel) {
  const auto schema = resolve_cardinalities(panel);
  std::vector<InputColumn> cols;
  if (panel.pickups_input) cols.push_back({std::string(Normalizer::kPickups), FeatureKind::Continuous, 0});
  for (const auto& f : schema.features()) {
    cols.push_back({f.name, f.kind, f.kind == FeatureKind::Categorical ? f.cardinality : 0});
  }
  return cols;
}

TimePoint WindowBatch::row_time(std::size_t window, std::size_t row) const {
  return windows[window].first_time +
         std::chrono::minutes{static_cast<std::int64_t>(row) * interval_minutes};
}

void fill_input_row(const Panel& panel, std::size_t slot, std::span<double> row) {
  std::size_t c = 0;
  if (panel.pickups_input) row[c++] = panel.pickups[slot];
  for (std::size_t f = 0; f < panel.schema.size(); ++f) row[c++] = panel.value(slot, f);
}

WindowBatch build_windows(const Panel& panel, std::size_t lookback) {
  if (panel.size() < lookback + 2) {
    throw SizeError("panel of " + std::to_string(panel.size()) +
                    " rows is too short for lookback " + std::to_string(lookback) +
                    " (needs " + std::to_string(lookback + 2) + ")");
  }
  return build_windows(panel, lookback, lookback + 1, panel.size());
}

WindowBatch build_windows(const Panel& panel, std::size_t lookback, std::size_t first_target,
                          std::size_t end_target) {
  if (first_target < lookback + 1 || end_target > panel.size() || first_target > end_target) {
    throw SizeError("window targets must lie in [lookback + 1, panel size)");
  }
  if (panel.missing_count() != 0) {
    throw ContractError("cannot window a panel with missing cells; impute first");
  }
  WindowBatch batch;
  batch.lookback = lookback;
  batch.interval_minutes = panel.grid.interval_minutes();
  batch.columns = input_columns(panel);
  const auto ncols = batch.columns.size();
  batch.windows.reserve(end_target - first_target);
  for (std::size_t j = first_target; j < end_target; ++j) {
    Window w;
    w.input = Array2D(lookback + 1, ncols);
    const auto first = j - lookback - 1;
    for (std::size_t r = 0; r <= lookback; ++r) fill_input_row(panel, first + r, w.input.row(r));
    w.target = panel.pickups[j];
    w.first_time = panel.time(first);
    w.target_time = panel.time(j);
    batch.windows.push_back(std::move(w));
  }
  return batch;
}

std::pair<Panel, Panel> train_test_split(const Panel& panel, TimePoint split) {
  if (split < panel.grid.start() || split > panel.grid.end()) {
    throw RangeError("split " + format_time(split) + " lies outside the panel grid");
  }
  const auto cut = slot_range(panel.grid, split, split).first;
  return {panel.slice(0, cut), panel.slice(cut, panel.size())};
}

}  // namespace ubernet
