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

#include "run_config.hpp"

#include <CLI11.hpp>
#include <sstream>
#include <type_traits>

#include "ubernet/csv.hpp"
#include "ubernet/error.hpp"
#include "ubernet/time.hpp"

namespace ubernet::cli {
namespace {

std::string show(const std::string& v) { return v; }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(double v) { return csv::format_double(v); }
template <typename T>
std::string show(T v) {
  return std::to_string(v);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ContractError(message);
}

std::size_t parse_size(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) throw ContractError(what + ": '" + text + "' is not a count");
  return static_cast<std::size_t>(v);
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  if (!csv::parse_double(text, v)) throw ContractError(what + ": '" + text + "' is not a number");
  return v;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = csv::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

namespace {

// The one list of settings: name, field, help text.
template <typename Self, typename F>
void visit_fields(Self& c, F&& add) {
  add("panel", c.panel, "panel CSV (schema and mask files sit next to it)");
  add("pickups", c.pickups, "ingest: raw pickup events CSV (datetime,region)");
  add("features", c.features, "ingest: directory of feature tables");
  add("schema", c.schema, "ingest: feature schema CSV");
  add("adjacency", c.adjacency, "ingest: region adjacency CSV (region,neighbor)");
  add("region", c.region, "ingest: restrict to one region (empty = all)");
  add("start", c.start, "ingest: first slot start (empty = earliest event)");
  add("end", c.end, "ingest: grid end, exclusive (empty = after the latest event)");
  add("interval", c.interval, "slot length in minutes (15 or 30)");
  add("fallback_slots", c.fallback_slots,
      "ingest: leading gaps fall back to the mean of the first N slots (0 = all)");

  add("lookback", c.lookback, "lookback s; windows hold s + 1 rows");
  add("channels", c.channels, "inner channel size k (embedding width 2k)");
  add("column_width", c.column_width, "per-column embedding width before mixing");
  add("dilations", c.dilations, "comma-separated dilation per residual block");
  add("head", c.head, "output head: regression | softmax");
  add("bins", c.bins, "softmax head: number of target bins");
  add("max_pool", c.max_pool, "max over time of the head features instead of the last row");

  add("l2", c.l2, "L2 penalty strength lambda");
  add("l1", c.l1, "L1 penalty strength");
  add("learning_rate", c.learning_rate, "gradient-descent step size");
  add("iterations", c.iterations, "training epochs");
  add("batch_size", c.batch_size, "windows per gradient step");
  add("shuffle", c.shuffle, "shuffle windows every epoch");
  add("seed", c.seed, "base seed for initialization, shuffling and jobs");
  add("jobs", c.jobs, "worker threads");

  add("model", c.model, "ubernet | seasonal_naive | persistence | ridge_arx | oracle | zero");
  add("checkpoint", c.checkpoint, "trained checkpoint to evaluate (empty = train from config)");
  add("split", c.split, "first test timestamp (empty = use split_fraction)");
  add("split_fraction", c.split_fraction, "share of slots used for training");
  add("folds", c.folds, "rolling cross-validation folds");
  add("min_train_fraction", c.min_train_fraction, "share of slots reserved for the first fold's training");
  add("feature_sets", c.feature_sets, "eval: comma-separated feature sets (A,B,C,D,all)");
  add("importance_repeats", c.importance_repeats, "permutation repeats per feature");
  add("pdp_features", c.pdp_features, "comma-separated features for partial dependence (empty = all continuous)");
  add("pdp_points", c.pdp_points, "partial-dependence grid size");
  add("breakdown_by", c.breakdown_by, "breakdown key: hour | region");
  add("residuals", c.residuals, "breakdown input (empty = <out>/residuals.csv)");

  add("season_period", c.season_period, "seasonal-naive period in slots (0 = one day)");
  add("ridge_lags", c.ridge_lags, "ridge-ARX lag order");
  add("ridge_alpha", c.ridge_alpha, "ridge-ARX penalty");
  add("ridge_exogenous", c.ridge_exogenous, "ridge-ARX features (empty = all)");

  add("gradcheck_step", c.gradcheck_step, "finite-difference step");
  add("gradcheck_tolerance", c.gradcheck_tolerance, "maximum relative error");
  add("gradcheck_coordinates", c.gradcheck_coordinates, "coordinates sampled");

  add("synth_slots", c.synth_slots, "synth: number of slots");
  add("synth_start", c.synth_start, "synth: first slot");
  add("synth_base", c.synth_base, "synth: base level");
  add("synth_diurnal", c.synth_diurnal, "synth: daily cosine amplitude");
  add("synth_peak_hour", c.synth_peak_hour, "synth: hour of the daily peak");
  add("synth_weekly", c.synth_weekly, "synth: weekend offset");
  add("synth_noise", c.synth_noise, "synth: noise standard deviation");
  add("synth_drivers", c.synth_drivers, "synth: drivers as name:weight:persistence:set, comma-separated");
  add("synth_driver_lag", c.synth_driver_lag, "synth: slots between a driver value and its effect");
  add("synth_calendar", c.synth_calendar, "synth: emit hour/day/wed features");

  add("out", c.out, "output directory");
}

}  // namespace

void RunConfig::bind(CLI::App& app) {
  visit_fields(*this, [&](const std::string& name, auto& field, const std::string& help) {
    auto* opt = app.add_option("--" + name, field, help)->capture_default_str();
    // Config files split `a,b` into a list; lists are joined back.
    if constexpr (std::is_same_v<std::decay_t<decltype(field)>, std::string>) {
      opt->multi_option_policy(CLI::MultiOptionPolicy::Join)->delimiter(',');
    }
  });
}

std::string RunConfig::echo() const {
  std::string text;
  visit_fields(*this, [&](const std::string& name, const auto& field, const std::string&) {
    text += name + " = " + show(field) + "\n";
  });
  return text;
}

std::vector<std::size_t> RunConfig::dilation_list() const {
  std::vector<std::size_t> out;
  for (const auto& d : split_list(dilations)) out.push_back(parse_size(d, "dilations"));
  return out;
}

std::vector<std::string> RunConfig::feature_set_list() const { return split_list(feature_sets); }
std::vector<std::string> RunConfig::pdp_feature_list() const { return split_list(pdp_features); }
std::vector<std::string> RunConfig::ridge_exogenous_list() const {
  return split_list(ridge_exogenous);
}

void RunConfig::validate() const {
  require(interval == 15 || interval == 30, "interval must be 15 or 30 minutes");
  require(lookback >= 1, "lookback must be at least 1");
  require(channels >= 1 && column_width >= 1, "channels and column_width must be positive");
  require(!dilation_list().empty(), "dilations must name at least one block");
  for (const auto d : dilation_list()) require(d >= 1, "dilations must be positive");
  require(head == "regression" || head == "softmax", "head must be regression or softmax");
  require(head != "softmax" || bins >= 2, "softmax head needs at least 2 bins");
  require(l2 >= 0.0 && l1 >= 0.0, "penalties must be non-negative");
  require(learning_rate >= 0.0, "learning_rate must be non-negative");
  require(iterations >= 1 && batch_size >= 1, "iterations and batch_size must be positive");
  require(jobs >= 1, "jobs must be at least 1");
  require(model == "ubernet" || model == "seasonal_naive" || model == "persistence" ||
              model == "ridge_arx" || model == "oracle" || model == "zero",
          "unknown model '" + model + "'");
  require(split_fraction > 0.0 && split_fraction < 1.0, "split_fraction must lie in (0, 1)");
  if (!split.empty()) parse_time(split);
  require(folds >= 2, "folds must be at least 2");
  require(min_train_fraction >= 0.0 && min_train_fraction < 1.0,
          "min_train_fraction must lie in [0, 1)");
  for (const auto& s : feature_set_list()) {
    require(s == "all" || s == "A" || s == "B" || s == "C" || s == "D",
            "unknown feature set '" + s + "'");
  }
  require(!feature_set_list().empty(), "feature_sets is empty");
  require(importance_repeats >= 1, "importance_repeats must be at least 1");
  require(pdp_points >= 2, "pdp_points must be at least 2");
  require(breakdown_by == "hour" || breakdown_by == "region", "breakdown_by must be hour or region");
  require(ridge_alpha >= 0.0, "ridge_alpha must be non-negative");
  require(gradcheck_step > 0.0 && gradcheck_tolerance > 0.0, "gradcheck step and tolerance must be positive");
  require(synth_slots >= 1, "synth_slots must be positive");
  parse_time(synth_start);
  if (!start.empty()) parse_time(start);
  if (!end.empty()) parse_time(end);
  synth_config();
  require(!out.empty(), "out must name a directory");
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig c;
  c.slots = synth_slots;
  c.interval_minutes = interval;
  c.seed = seed;
  c.start = parse_time(synth_start);
  c.base = synth_base;
  c.diurnal_amplitude = synth_diurnal;
  c.peak_hour = synth_peak_hour;
  c.weekly_amplitude = synth_weekly;
  c.noise_sigma = synth_noise;
  c.driver_lag = synth_driver_lag;
  c.calendar_features = synth_calendar;
  for (const auto& spec : split_list(synth_drivers)) {
    const auto parts = split_list(spec, ':');
    if (parts.size() < 2 || parts.size() > 4) {
      throw ContractError("synth driver '" + spec + "' must be name:weight[:persistence[:set]]");
    }
    SynthDriver d;
    d.name = parts[0];
    d.weight = parse_number(parts[1], "synth driver weight");
    if (parts.size() > 2) d.persistence = parse_number(parts[2], "synth driver persistence");
    if (parts.size() > 3) d.set = feature_set_from(parts[3]);
    c.drivers.push_back(d);
  }
  return c;
}

UbernetSettings RunConfig::ubernet_settings() const {
  UbernetSettings s;
  s.network.lookback = lookback;
  s.network.channels = channels;
  s.network.column_width = column_width;
  s.network.dilations = dilation_list();
  s.network.head = head == "softmax" ? HeadKind::Softmax : HeadKind::Regression;
  s.network.max_pool = max_pool;
  s.bins = bins;
  s.optimizer.learning_rate = learning_rate;
  s.optimizer.iterations = iterations;
  s.optimizer.batch_size = batch_size;
  s.optimizer.shuffle = shuffle;
  s.optimizer.jobs = jobs;
  s.loss.l2 = l2;
  s.loss.l1 = l1;
  return s;
}

HarnessOptions RunConfig::harness_options() const {
  HarnessOptions o;
  o.model = model;
  o.seed = seed;
  o.jobs = jobs;
  return o;
}

std::size_t RunConfig::season_slots() const {
  return season_period ? season_period : static_cast<std::size_t>(24 * 60 / interval);
}

std::size_t RunConfig::split_slot(const Panel& p) const {
  std::size_t cut = 0;
  if (!split.empty()) {
    const auto t = parse_time(split);
    if (t <= p.grid.start() || t >= p.grid.end()) {
      throw RangeError("split " + split + " must fall strictly inside the panel");
    }
    cut = slot_range(p.grid, t, t).first;
  } else {
    cut = static_cast<std::size_t>(split_fraction * static_cast<double>(p.size()));
  }
  if (cut == 0 || cut >= p.size()) throw RangeError("split leaves an empty train or test range");
  return cut;
}

ForecasterFactory make_factory(const RunConfig& config) {
  if (config.model == "ubernet") {
    const auto settings = config.ubernet_settings();
    return [settings](std::uint64_t seed) { return std::make_unique<UbernetForecaster>(settings, seed); };
  }
  if (config.model == "seasonal_naive") {
    const auto period = config.season_slots();
    return [period](std::uint64_t) { return std::make_unique<SeasonalNaiveForecaster>(period); };
  }
  if (config.model == "persistence") {
    return [](std::uint64_t) { return std::make_unique<PersistenceForecaster>(); };
  }
  if (config.model == "ridge_arx") {
    const auto lags = config.ridge_lags;
    const auto exog = config.ridge_exogenous_list();
    const auto alpha = config.ridge_alpha;
    return [=](std::uint64_t) { return std::make_unique<RidgeArxForecaster>(lags, exog, alpha); };
  }
  if (config.model == "oracle") {
    return [](std::uint64_t) { return std::make_unique<OracleForecaster>(); };
  }
  if (config.model == "zero") {
    return [](std::uint64_t) { return std::make_unique<ConstantForecaster>(0.0); };
  }
  throw ContractError("unknown model '" + config.model + "'");
}

}  // namespace ubernet::cli
