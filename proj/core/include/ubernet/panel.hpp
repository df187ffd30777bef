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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ubernet/array2d.hpp"
#include "ubernet/time.hpp"

namespace ubernet {

// ---------------------------------------------------------------------------
// Feature schema
// ---------------------------------------------------------------------------

// Feature groups: A temporal/real-time, B demographic, C travel-to-work,
// D location and built environment.
enum class FeatureSet { A, B, C, D };
enum class FeatureKind { Continuous, Categorical };
enum class Spatial { Independent, Dependent };

char to_char(FeatureSet set);
FeatureSet feature_set_from(std::string_view text);
std::string_view to_string(FeatureKind kind);
std::string_view to_string(Spatial spatial);

struct FeatureSpec {
  std::string name;
  FeatureSet set = FeatureSet::A;
  FeatureKind kind = FeatureKind::Continuous;
  Spatial spatial = Spatial::Independent;
  // Number of levels for categorical features; 0 means "infer from data".
  int cardinality = 0;

  bool operator==(const FeatureSpec&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws SchemaError on duplicate names or a set/spatial mismatch (set A
  // must be space-independent, sets B-D space-dependent).
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  // The 28 features of the canonical NYC feature table.
  static FeatureSchema canonical();

  const std::vector<FeatureSpec>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }
  bool empty() const { return features_.empty(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  // Keeps the named features, in schema order.
  FeatureSchema select(const std::vector<std::string>& names) const;
  FeatureSchema without(std::string_view name) const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<FeatureSpec> features_;
};

// `name,set,kind,spatial[,cardinality]`
FeatureSchema read_schema(std::istream& in);
FeatureSchema read_schema_file(const std::string& path);
void write_schema(std::ostream& out, const FeatureSchema& schema);

// ---------------------------------------------------------------------------
// Raw events and auxiliary tables
// ---------------------------------------------------------------------------

struct RawPickupEvent {
  TimePoint timestamp;
  std::string region;
};

// Header must name `datetime` and `region`; other columns are ignored.
// Throws SchemaError for a missing column and ParseError (with the line
// number) for a malformed row.
std::vector<RawPickupEvent> parse_pickups(std::istream& in);

// Time-keyed readings (`datetime,<name>...`). Empty cells are absent values.
struct TimeTable {
  std::vector<std::string> columns;
  std::vector<TimePoint> times;
  // values[column][row]
  std::vector<std::vector<std::optional<double>>> values;
};

// Region-keyed attributes (`region,<name>...`).
struct RegionTable {
  std::vector<std::string> columns;
  std::vector<std::string> regions;
  std::vector<std::vector<std::optional<double>>> values;
};

struct FeatureTables {
  std::vector<TimeTable> time_tables;
  std::vector<RegionTable> region_tables;
};

TimeTable read_time_table(std::istream& in);
RegionTable read_region_table(std::istream& in);
// Loads every *.csv in `dir`; the first header column (`datetime` or
// `region`) decides the table kind.
FeatureTables read_feature_tables(const std::string& dir);

// Undirected neighbor map built from a `region,neighbor` edge list.
using Adjacency = std::map<std::string, std::set<std::string>>;
Adjacency read_adjacency(std::istream& in);
void add_edge(Adjacency& adjacency, const std::string& a, const std::string& b);

// ---------------------------------------------------------------------------
// Panel
// ---------------------------------------------------------------------------

// Empty region means the citywide (global) panel.
struct RegionScope {
  std::string region;

  static RegionScope global() { return {}; }
  bool is_global() const { return region.empty(); }
  bool matches(std::string_view r) const { return region.empty() || region == r; }
  std::string label() const { return region.empty() ? "all" : region; }
  bool operator==(const RegionScope&) const = default;
};

// Per-slot pickup composition by region plus per-region values of the
// space-dependent features. Only panels built from raw events carry it.
struct RegionalDetail {
  std::vector<std::string> regions;  // sorted, unique
  // slot -> (region index, pickups) for regions with pickups in that slot
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> slot_counts;
  // feature name -> value per region (indexed like `regions`)
  std::map<std::string, std::vector<std::optional<double>>> values;

  bool operator==(const RegionalDetail&) const = default;
};

struct Panel {
  TimeGrid grid;
  RegionScope scope;
  FeatureSchema schema;
  std::vector<double> pickups;
  // slots x features, row-major; NaN where missing
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
  std::optional<RegionalDetail> regional;
  // When false the pickups column is the target only, never an input.
  bool pickups_input = true;

  std::size_t size() const { return pickups.size(); }
  std::size_t feature_count() const { return schema.size(); }
  double value(std::size_t slot, std::size_t feature) const {
    return values[slot * schema.size() + feature];
  }
  double& value(std::size_t slot, std::size_t feature) {
    return values[slot * schema.size() + feature];
  }
  bool is_missing(std::size_t slot, std::size_t feature) const {
    return missing[slot * schema.size() + feature] != 0;
  }
  std::size_t missing_count() const;
  TimePoint time(std::size_t slot) const { return grid.slot_start(slot); }

  // Rows [begin, end). Regional detail is sliced along.
  Panel slice(std::size_t begin, std::size_t end) const;
  // Keeps only the named features (pickups always stay).
  Panel select_features(const std::vector<std::string>& names) const;
  Panel without_feature(std::string_view name) const;

  // Throws ContractError when the structural invariants do not hold.
  void validate() const;

  bool operator==(const Panel&) const = default;
};

// Panel with one row per slot and no features.
Panel make_pickup_panel(const TimeGrid& grid, std::vector<double> pickups,
                        RegionScope scope = RegionScope::global());

struct AggregateResult {
  Panel panel;
  std::size_t total_events = 0;
  std::size_t counted = 0;
  std::size_t dropped_outside_grid = 0;
  std::size_t out_of_scope = 0;
};

// Counts events per half-open slot [start, start + interval).
AggregateResult aggregate_counts(const std::vector<RawPickupEvent>& events,
                                 const TimeGrid& grid, const RegionScope& scope);

// Attaches every schema feature. Space-independent features average the
// readings inside each slot (categorical: most frequent level). Space-
// dependent features average region values weighted by that slot's pickups
// per region; a cell is missing when a contributing region has no value.
// Space-independent `hour`, `day`, `month` and `wed` (weekend flag) are
// derived from the slot start when no table supplies them. Throws
// SchemaError when any other feature has no source column.
Panel join_features(const Panel& panel, const FeatureTables& tables,
                    const FeatureSchema& schema);

struct ImputeOptions {
  // Leading gaps of space-independent features fall back to the mean of the
  // observed values in slots [0, fallback_end); 0 means the whole panel.
  std::size_t fallback_end = 0;
};

// Fills every missing cell. Space-dependent region values come from the
// nearest region by breadth-first hops over `adjacency` (ties: smallest
// region id); space-independent cells are forward filled.
// Throws ImputationError for a feature with no observed value at all.
Panel impute_missing(const Panel& panel, const Adjacency& adjacency,
                     const ImputeOptions& options = {});

// Nearest region (BFS hops, lexicographic tie-break) that has a value in
// `has_value`; empty when none is reachable.
std::optional<std::string> nearest_region_with_value(
    const std::string& origin, const Adjacency& adjacency,
    const std::set<std::string>& has_value);

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

struct ColumnStats {
  std::string name;
  double mean = 0.0;
  double stddev = 1.0;
  // Zero variance in the fit range: values pass through untouched.
  bool constant = false;

  bool operator==(const ColumnStats&) const = default;
};

// Per-column z-score over the pickups column and every continuous feature.
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(std::vector<ColumnStats> columns);

  // Statistics come only from rows [begin, end).
  static Normalizer fit(const Panel& panel, std::size_t begin, std::size_t end);

  Panel apply(const Panel& panel) const;
  Panel invert(const Panel& panel) const;

  double apply_value(std::string_view column, double v) const;
  double invert_value(std::string_view column, double v) const;
  double normalize_pickups(double v) const { return apply_value(kPickups, v); }
  double denormalize_pickups(double v) const { return invert_value(kPickups, v); }

  const std::vector<ColumnStats>& columns() const { return columns_; }
  const ColumnStats* find(std::string_view column) const;
  std::vector<std::string> constant_columns() const;

  bool operator==(const Normalizer&) const = default;

  static constexpr std::string_view kPickups = "p";

 private:
  std::vector<ColumnStats> columns_;
};

// Range [begin, end) of slot indices covered by the time interval.
std::pair<std::size_t, std::size_t> slot_range(const TimeGrid& grid,
                                               TimePoint from, TimePoint to);

Normalizer fit_normalizer(const Panel& panel, TimePoint from, TimePoint to);

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

// One network input column. Column 0 is the pickups column unless the panel
// excludes pickups from the inputs.
struct InputColumn {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  int cardinality = 0;

  bool operator==(const InputColumn&) const = default;
};

// Schema with every categorical cardinality resolved (declared, else
// max observed level + 1).
FeatureSchema resolve_cardinalities(const Panel& panel);
std::vector<InputColumn> input_columns(const Panel& panel);

struct Window {
  Array2D input;  // (lookback + 1) x columns
  double target = 0.0;
  TimePoint first_time;
  TimePoint target_time;
  // Set when some input cell holds a model output (iterative inference).
  bool self_fed = false;
};

struct WindowBatch {
  std::size_t lookback = 0;
  int interval_minutes = 15;
  std::vector<InputColumn> columns;
  std::vector<Window> windows;

  TimePoint row_time(std::size_t window, std::size_t row) const;
  std::size_t size() const { return windows.size(); }
};

// Row values of slot `slot` in input-column order.
void fill_input_row(const Panel& panel, std::size_t slot, std::span<double> row);

// Windows for every target slot j in [lookback + 1, size): input rows
// j - lookback - 1 ... j - 1, target p(j). Throws SizeError when the panel
// has fewer than lookback + 2 rows.
WindowBatch build_windows(const Panel& panel, std::size_t lookback);
// Same, restricted to target slots in [first_target, end_target).
WindowBatch build_windows(const Panel& panel, std::size_t lookback,
                          std::size_t first_target, std::size_t end_target);

// Rows strictly before `split` go to the first panel. Throws RangeError
// when split lies outside [grid.start, grid.end].
std::pair<Panel, Panel> train_test_split(const Panel& panel, TimePoint split);

// ---------------------------------------------------------------------------
// Synthetic panels
// ---------------------------------------------------------------------------

struct SynthDriver {
  std::string name;
  // Contribution to pickups per unit of the driver.
  double weight = 0.0;
  // AR(1) coefficient; the driver has unit stationary variance.
  double persistence = 0.95;
  FeatureSet set = FeatureSet::A;
};

struct SynthConfig {
  std::size_t slots = 2000;
  int interval_minutes = 15;
  std::uint64_t seed = 1;
  TimePoint start = parse_time("2014-04-01T00:00");
  double base = 100.0;
  double diurnal_amplitude = 30.0;
  int peak_hour = 18;
  // Added on Saturdays and Sundays.
  double weekly_amplitude = -15.0;
  std::vector<SynthDriver> drivers;
  double noise_sigma = 5.0;
  // Emit `hour`, `day` and `wed` categorical features.
  bool calendar_features = true;
  // Pickups respond to driver values this many slots earlier, so a model
  // reading rows before t can see the value acting on p(t).
  std::size_t driver_lag = 1;
};

// p(t) = round(max(0, base + diurnal + weekly + sum weight * g(t - lag) + noise)).
Panel synth_panel(const SynthConfig& config);

// Noise-free expected pickups of the generator at slot `slot`, before the
// max/round step, given the driver values acting on that slot.
double synth_mean(const SynthConfig& config, TimePoint t,
                  std::span<const double> driver_values);

// ---------------------------------------------------------------------------
// Panel interchange: <stem>.csv (`datetime,p,<features>`), <stem>_mask.csv
// (same header, 0/1 for imputed cells) and <stem>_schema.csv.
// ---------------------------------------------------------------------------

void write_panel_csv(std::ostream& out, const Panel& panel);
void write_mask_csv(std::ostream& out, const Panel& panel,
                    const std::vector<std::uint8_t>& mask);
// Writes the three interchange files next to `path` (which names the
// panel CSV itself).
void write_panel_files(const std::string& path, const Panel& panel,
                       const std::vector<std::uint8_t>& mask);

// Reads a panel CSV against `schema`. The grid interval is inferred from
// the timestamps; `interval_minutes` is used for single-row panels.
// Empty or `NA` cells are marked missing.
Panel read_panel_csv(std::istream& in, const FeatureSchema& schema,
                     int interval_minutes = 15,
                     RegionScope scope = RegionScope::global());
// Reads <stem>.csv with the schema from <stem>_schema.csv.
Panel read_panel_files(const std::string& path, int interval_minutes = 15);

std::string schema_path_for(const std::string& panel_path);
std::string mask_path_for(const std::string& panel_path);

}  // namespace ubernet
